#include "madmm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace madmm {

// ------------------------------------------------------------------ files

Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::schema, origin + ": malformed JSON (" + e.what() + ")");
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json read_json_file(const std::string& path) {
  return parse_json(read_text_file(path), path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------- JSON helpers

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& why) {
  throw Error(ErrorKind::schema, where + ": " + why);
}

const Json& field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) schema_error(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(where + "/" + key, "missing field");
  return *it;
}

// Finite numbers are JSON numbers; infinities are the strings "inf"/"-inf".
Json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
  }
  schema_error(where, "expected a number");
}

double number_or(const Json& j, const std::string& key, double fallback,
                 const std::string& where) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, where + "/" + key);
}

Index dim_field(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = field(j, key, where);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    schema_error(where + "/" + key, "expected a positive integer");
  return static_cast<Index>(v.get<long long>());
}

std::string string_field(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = field(j, key, where);
  if (!v.is_string()) schema_error(where + "/" + key, "expected a string");
  return v.get<std::string>();
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(number_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, Index rows, Index cols, const std::string& where) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    schema_error(where, "expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      schema_error(where + "/" + std::to_string(i),
                   "expected " + std::to_string(cols) + " columns");
    for (Index c = 0; c < cols; ++c)
      m(i, c) = number(row[static_cast<std::size_t>(c)],
                       where + "/" + std::to_string(i) + "/" + std::to_string(c));
  }
  return m;
}

Vector sized_vector(const Json& j, Index n, const std::string& where) {
  Vector v = vector_from_json(j, where);
  if (v.size() != n) schema_error(where, "expected length " + std::to_string(n));
  return v;
}

}  // namespace

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number_json(v(i)));
  return a;
}

Vector vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Index>(i)) = number(j[i], where + "/" + std::to_string(i));
  return v;
}

// ------------------------------------------------------------------- sets

Json to_json(const SetDescriptor& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  switch (s.kind) {
    case SetDescriptor::Kind::box:
      j["lo"] = vector_json(s.lo);
      j["hi"] = vector_json(s.hi);
      break;
    case SetDescriptor::Kind::nonneg: j["dim"] = s.dim(); break;
    case SetDescriptor::Kind::ball:
      j["center"] = vector_json(s.center);
      j["radius"] = s.radius;
      break;
  }
  return j;
}

SetDescriptor set_from_json(const Json& j, const std::string& where) {
  const std::string kind = string_field(j, "kind", where);
  try {
    if (kind == "box")
      return SetDescriptor::box(vector_from_json(field(j, "lo", where), where + "/lo"),
                                vector_from_json(field(j, "hi", where), where + "/hi"));
    if (kind == "nonneg") return SetDescriptor::nonneg(dim_field(j, "dim", where));
    if (kind == "ball")
      return SetDescriptor::ball(
          vector_from_json(field(j, "center", where), where + "/center"),
          number(field(j, "radius", where), where + "/radius"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::schema) throw;
    schema_error(where, e.what());
  }
  schema_error(where + "/kind", "unknown set kind '" + kind + "'");
}

// ----------------------------------------------------------------- terms

namespace {

Json term_json(const ProxTerm& t) {
  Json j;
  j["kind"] = to_string(t.kind());
  Json params = Json::object();
  switch (t.kind()) {
    case ProxTerm::Kind::zero: break;
    case ProxTerm::Kind::l1: params["lambda"] = t.lambda(); break;
    case ProxTerm::Kind::indicator: params["set"] = to_json(t.set()); break;
    case ProxTerm::Kind::quadratic:
      params["P"] = matrix_json(t.hessian());
      params["b"] = vector_json(t.linear());
      break;
  }
  j["params"] = std::move(params);
  return j;
}

ProxTerm term_from_json(const Json& j, Index dim, const std::string& where) {
  const std::string kind = string_field(j, "kind", where);
  const Json empty = Json::object();
  const Json& params = j.contains("params") ? j["params"] : empty;
  const std::string pw = where + "/params";
  if (kind == "zero") return ProxTerm::zero(dim);
  if (kind == "l1") {
    const double lambda = number(field(params, "lambda", pw), pw + "/lambda");
    if (!(lambda >= 0.0)) schema_error(pw + "/lambda", "must be >= 0");
    return ProxTerm::l1(dim, lambda);
  }
  if (kind == "indicator") {
    SetDescriptor s = set_from_json(field(params, "set", pw), pw + "/set");
    if (s.dim() != dim) schema_error(pw + "/set", "dimension mismatch");
    return ProxTerm::indicator(std::move(s));
  }
  if (kind == "quadratic") {
    Matrix p = matrix_from_json(field(params, "P", pw), dim, dim, pw + "/P");
    Vector b = sized_vector(field(params, "b", pw), dim, pw + "/b");
    try {
      return ProxTerm::quadratic(std::move(p), std::move(b));
    } catch (const Error& e) {
      schema_error(pw, e.what());
    }
  }
  schema_error(where + "/kind", "unknown nonsmooth kind '" + kind + "'");
}

Json smooth_json(const SeparableSmooth& s) {
  Json j;
  j["kind"] = s.kind == SeparableSmooth::Kind::logistic ? "logistic" : "none";
  j["weight"] = s.weight;
  return j;
}

SeparableSmooth smooth_from_json(const Json& j, const std::string& where) {
  const std::string kind = string_field(j, "kind", where);
  if (kind == "none") return {};
  if (kind == "logistic") {
    const double w = number(field(j, "weight", where), where + "/weight");
    if (!(w >= 0.0)) schema_error(where + "/weight", "must be >= 0");
    return SeparableSmooth{SeparableSmooth::Kind::logistic, w};
  }
  schema_error(where + "/kind", "unknown smooth kind '" + kind + "'");
}

const char* coupling_name(SmoothCoupling::Kind k) {
  switch (k) {
    case SmoothCoupling::Kind::zero: return "zero";
    case SmoothCoupling::Kind::quadratic: return "quadratic";
    case SmoothCoupling::Kind::projection_penalty: return "projection_penalty";
  }
  return "?";
}

SmoothCoupling::Kind coupling_from_string(const std::string& s, const std::string& where) {
  if (s == "zero") return SmoothCoupling::Kind::zero;
  if (s == "quadratic") return SmoothCoupling::Kind::quadratic;
  if (s == "projection_penalty") return SmoothCoupling::Kind::projection_penalty;
  schema_error(where, "unknown coupling '" + s + "'");
}

}  // namespace

// ------------------------------------------------------------------- spec

Json to_json(const InstanceSpec& s) {
  Json j;
  j["family"] = to_string(s.family);
  j["dims"] = {{"u", s.u_dim}, {"v", s.v_dim}, {"x", s.x_dim}};
  j["seed"] = s.seed;
  j["conditioning"] = s.conditioning;
  j["sparsity"] = s.sparsity;
  j["nonsmooth"] = {{"p", to_string(s.p_kind)}, {"q", to_string(s.q_kind)}};
  j["l1_lambda"] = s.l1_lambda;
  j["box"] = {{"lo", number_json(s.box_lo)}, {"hi", number_json(s.box_hi)}};
  j["smooth_separable"] = {{"f_weight", s.f_weight}, {"g_weight", s.g_weight}};
  Json sets = Json::object();
  if (s.k1) sets["K1"] = to_json(*s.k1);
  if (s.k2) sets["K2"] = to_json(*s.k2);
  if (s.k3) sets["K3"] = to_json(*s.k3);
  j["sets"] = std::move(sets);
  j["rho"] = s.rho;
  j["eta"] = s.eta;
  return j;
}

InstanceSpec spec_from_json(const Json& j) {
  const std::string w = "spec";
  if (!j.is_object()) schema_error(w, "expected an object");
  InstanceSpec s;
  try {
    s.family = family_from_string(string_field(j, "family", w));
  } catch (const Error& e) {
    schema_error(w + "/family", e.what());
  }
  if (s.family != Family::analytic_tiny || j.contains("dims")) {
    const Json& dims = field(j, "dims", w);
    s.u_dim = dim_field(dims, "u", w + "/dims");
    s.v_dim = dim_field(dims, "v", w + "/dims");
    s.x_dim = dim_field(dims, "x", w + "/dims");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) schema_error(w + "/seed", "expected an unsigned integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  s.conditioning = number_or(j, "conditioning", s.conditioning, w);
  s.sparsity = number_or(j, "sparsity", s.sparsity, w);
  if (j.contains("nonsmooth")) {
    const Json& ns = j["nonsmooth"];
    try {
      if (ns.contains("p")) s.p_kind = term_kind_from_string(ns["p"].get<std::string>());
      if (ns.contains("q")) s.q_kind = term_kind_from_string(ns["q"].get<std::string>());
    } catch (const std::exception& e) {
      schema_error(w + "/nonsmooth", e.what());
    }
  }
  s.l1_lambda = number_or(j, "l1_lambda", s.l1_lambda, w);
  if (j.contains("box")) {
    s.box_lo = number_or(j["box"], "lo", s.box_lo, w + "/box");
    s.box_hi = number_or(j["box"], "hi", s.box_hi, w + "/box");
  }
  if (j.contains("smooth_separable")) {
    s.f_weight = number_or(j["smooth_separable"], "f_weight", 0.0, w + "/smooth_separable");
    s.g_weight = number_or(j["smooth_separable"], "g_weight", 0.0, w + "/smooth_separable");
  }
  if (j.contains("sets")) {
    const Json& sets = j["sets"];
    if (sets.contains("K1")) s.k1 = set_from_json(sets["K1"], w + "/sets/K1");
    if (sets.contains("K2")) s.k2 = set_from_json(sets["K2"], w + "/sets/K2");
    if (sets.contains("K3")) s.k3 = set_from_json(sets["K3"], w + "/sets/K3");
  }
  s.rho = number_or(j, "rho", s.rho, w);
  s.eta = number_or(j, "eta", s.eta, w);
  try {
    s.validate();
  } catch (const Error& e) {
    schema_error(w, e.what());
  }
  return s;
}

// --------------------------------------------------------------- instance

Json to_json(const InstanceData& d) {
  const CoupledProblem prob = build_problem(d);
  const auto& phi = prob.phi;
  Json j;
  j["format"] = kInstanceFormat;
  j["family"] = to_string(d.family);
  j["dims"] = {{"u", d.u_dim()}, {"v", d.v_dim()}, {"x", d.x_dim()}};
  j["spec"] = to_json(d.spec);
  Json mats;
  if (d.qtilde.size()) mats["Qtilde"] = matrix_json(d.qtilde);
  mats["A"] = matrix_json(d.a);
  mats["B"] = matrix_json(d.b);
  j["matrices"] = std::move(mats);
  j["vectors"] = {{"c", vector_json(d.c)}};
  Json env;
  env["coupling"] = coupling_name(d.coupling);
  env["Q_blocks"] = {{"Q11", matrix_json(materialize(phi.q_lower.q11))},
                     {"Q12", matrix_json(materialize(phi.q_lower.q12))},
                     {"Q22", matrix_json(materialize(phi.q_lower.q22))}};
  env["D1"] = matrix_json(materialize(phi.d1));
  env["D2"] = matrix_json(materialize(phi.d2));
  env["eta"] = d.eta;
  j["envelope"] = std::move(env);
  j["nonsmooth"] = {{"p", term_json(d.p)}, {"q", term_json(d.q)}};
  if (d.f.kind != SeparableSmooth::Kind::none || d.g.kind != SeparableSmooth::Kind::none)
    j["smooth_separable"] = {{"f", smooth_json(d.f)}, {"g", smooth_json(d.g)}};
  Json sets = Json::object();
  if (d.k1) sets["K1"] = to_json(*d.k1);
  if (d.p.kind() == ProxTerm::Kind::indicator) sets["K2"] = to_json(d.p.set());
  if (d.q.kind() == ProxTerm::Kind::indicator) sets["K3"] = to_json(d.q.set());
  j["sets"] = std::move(sets);
  if (d.coupling == SmoothCoupling::Kind::projection_penalty) j["rho"] = d.rho;
  if (d.solution) {
    j["solution"] = {{"u", vector_json(d.solution->u)},
                     {"v", vector_json(d.solution->v)},
                     {"x", vector_json(d.solution->x)}};
  }
  return j;
}

InstanceData instance_from_json(const Json& j) {
  const std::string w = "instance";
  if (!j.is_object()) schema_error(w, "expected an object");
  if (string_field(j, "format", w) != kInstanceFormat)
    schema_error(w + "/format", "unsupported format");
  InstanceData d;
  try {
    d.family = family_from_string(string_field(j, "family", w));
  } catch (const Error& e) {
    schema_error(w + "/family", e.what());
  }
  const Json& dims = field(j, "dims", w);
  const Index n = dim_field(dims, "u", w + "/dims");
  const Index m = dim_field(dims, "v", w + "/dims");
  const Index l = dim_field(dims, "x", w + "/dims");
  d.spec = spec_from_json(field(j, "spec", w));

  const Json& mats = field(j, "matrices", w);
  if (mats.contains("Qtilde"))
    d.qtilde = matrix_from_json(mats["Qtilde"], n + m, n + m, w + "/matrices/Qtilde");
  d.a = matrix_from_json(field(mats, "A", w + "/matrices"), n, l, w + "/matrices/A");
  d.b = matrix_from_json(field(mats, "B", w + "/matrices"), m, l, w + "/matrices/B");
  d.c = sized_vector(field(field(j, "vectors", w), "c", w + "/vectors"), l, w + "/vectors/c");

  const Json& env = field(j, "envelope", w);
  d.coupling = coupling_from_string(string_field(env, "coupling", w + "/envelope"),
                                    w + "/envelope/coupling");
  d.eta = number(field(env, "eta", w + "/envelope"), w + "/envelope/eta");
  if (d.coupling != SmoothCoupling::Kind::zero && d.qtilde.size() == 0)
    schema_error(w + "/matrices/Qtilde", "required for this coupling");

  const Json& ns = field(j, "nonsmooth", w);
  d.p = term_from_json(field(ns, "p", w + "/nonsmooth"), n, w + "/nonsmooth/p");
  d.q = term_from_json(field(ns, "q", w + "/nonsmooth"), m, w + "/nonsmooth/q");
  if (j.contains("smooth_separable")) {
    const Json& ss = j["smooth_separable"];
    d.f = smooth_from_json(field(ss, "f", w + "/smooth_separable"), w + "/smooth_separable/f");
    d.g = smooth_from_json(field(ss, "g", w + "/smooth_separable"), w + "/smooth_separable/g");
  }
  if (j.contains("sets") && j["sets"].contains("K1"))
    d.k1 = set_from_json(j["sets"]["K1"], w + "/sets/K1");
  if (d.coupling == SmoothCoupling::Kind::projection_penalty) {
    d.rho = number(field(j, "rho", w), w + "/rho");
    if (!d.k1) schema_error(w + "/sets/K1", "required for projection_penalty");
  }
  if (j.contains("solution")) {
    const Json& s = j["solution"];
    d.solution = ReferencePoint{sized_vector(field(s, "u", w + "/solution"), n, w + "/solution/u"),
                                sized_vector(field(s, "v", w + "/solution"), m, w + "/solution/v"),
                                sized_vector(field(s, "x", w + "/solution"), l, w + "/solution/x")};
  }

  // The stored envelope must agree with the one rebuilt from the data.
  CoupledProblem prob = [&] {
    try {
      return build_problem(d);
    } catch (const Error& e) {
      schema_error(w, e.what());
    }
  }();
  const Json& qb = field(env, "Q_blocks", w + "/envelope");
  auto check = [&](const Json& stored, const Matrix& rebuilt, const std::string& name) {
    const Matrix s = matrix_from_json(stored, rebuilt.rows(), rebuilt.cols(),
                                      w + "/envelope/" + name);
    if ((s - rebuilt).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, rebuilt.cwiseAbs().maxCoeff()))
      schema_error(w + "/envelope/" + name, "inconsistent with the instance data");
  };
  check(field(qb, "Q11", w + "/envelope/Q_blocks"), materialize(prob.phi.q_lower.q11), "Q_blocks/Q11");
  check(field(qb, "Q12", w + "/envelope/Q_blocks"), materialize(prob.phi.q_lower.q12), "Q_blocks/Q12");
  check(field(qb, "Q22", w + "/envelope/Q_blocks"), materialize(prob.phi.q_lower.q22), "Q_blocks/Q22");
  check(field(env, "D1", w + "/envelope"), materialize(prob.phi.d1), "D1");
  check(field(env, "D2", w + "/envelope"), materialize(prob.phi.d2), "D2");
  return d;
}

// ----------------------------------------------------------------- config

namespace {

Json prox_choice_json(const ProxChoice& p) {
  Json j;
  switch (p.kind) {
    case ProxChoice::Kind::automatic:
      j["kind"] = "auto";
      j["shift"] = p.shift;
      break;
    case ProxChoice::Kind::zero: j["kind"] = "zero"; break;
    case ProxChoice::Kind::identity:
      j["kind"] = "identity";
      j["scale"] = p.scale;
      break;
    case ProxChoice::Kind::explicit_matrix:
      j["kind"] = "explicit";
      j["matrix"] = matrix_json(p.matrix);
      break;
  }
  return j;
}

ProxChoice prox_choice_from_json(const Json& j, const std::string& where) {
  ProxChoice p;
  const std::string kind = string_field(j, "kind", where);
  if (kind == "auto") {
    p.kind = ProxChoice::Kind::automatic;
    p.shift = number_or(j, "shift", 0.0, where);
    if (!(p.shift >= 0.0)) schema_error(where + "/shift", "must be >= 0");
  } else if (kind == "zero") {
    p.kind = ProxChoice::Kind::zero;
  } else if (kind == "identity") {
    p.kind = ProxChoice::Kind::identity;
    p.scale = number_or(j, "scale", 1.0, where);
    if (!(p.scale >= 0.0)) schema_error(where + "/scale", "must be >= 0");
  } else if (kind == "explicit") {
    p.kind = ProxChoice::Kind::explicit_matrix;
    const Json& mj = field(j, "matrix", where);
    if (!mj.is_array() || mj.empty()) schema_error(where + "/matrix", "expected a square matrix");
    const Index n = static_cast<Index>(mj.size());
    p.matrix = matrix_from_json(mj, n, n, where + "/matrix");
  } else {
    schema_error(where + "/kind", "unknown kind '" + kind + "'");
  }
  return p;
}

SelfAdjointOperator resolve_prox(const CoupledProblem& prob, double sigma,
                                 const std::optional<ProxChoice>& choice,
                                 const ProxTerm& term, Block block) {
  const Index dim = block == Block::u ? prob.u_dim() : prob.v_dim();
  ProxChoice c;
  if (choice) {
    c = *choice;
  } else {
    c.kind = term.is_quadratic() ? ProxChoice::Kind::zero : ProxChoice::Kind::automatic;
  }
  switch (c.kind) {
    case ProxChoice::Kind::automatic:
      return prox_identity_semi_proximal(prob, sigma, block, c.shift);
    case ProxChoice::Kind::zero: return SelfAdjointOperator::zero(dim);
    case ProxChoice::Kind::identity: return SelfAdjointOperator::identity(dim, c.scale);
    case ProxChoice::Kind::explicit_matrix:
      if (c.matrix.rows() != dim)
        throw Error(ErrorKind::schema, std::string(block == Block::u ? "config/S" : "config/T") +
                                           "/matrix: dimension mismatch");
      return SelfAdjointOperator::dense(c.matrix, true);
  }
  return SelfAdjointOperator::zero(dim);
}

}  // namespace

Json to_json(const RunConfig& c) {
  Json j;
  j["sigma"] = c.sigma;
  if (c.tau) j["tau"] = *c.tau;
  if (c.s) j["S"] = prox_choice_json(*c.s);
  if (c.t) j["T"] = prox_choice_json(*c.t);
  j["backend"] = {{"u", to_string(c.u_backend)}, {"v", to_string(c.v_backend)}};
  j["max_iters"] = c.max_iters;
  j["kkt_tol"] = c.kkt_tol;
  j["record_every"] = c.record_every;
  j["divergence_cap"] = c.divergence_cap;
  j["seed"] = c.seed;
  return j;
}

RunConfig config_from_json(const Json& j) {
  const std::string w = "config";
  if (!j.is_object()) schema_error(w, "expected an object");
  RunConfig c;
  c.sigma = number_or(j, "sigma", c.sigma, w);
  if (!(c.sigma > 0.0)) schema_error(w + "/sigma", "must be positive");
  if (j.contains("tau")) {
    c.tau = number(j["tau"], w + "/tau");
    if (!(*c.tau > 0.0 && *c.tau < kGoldenRatio))
      schema_error(w + "/tau", "must lie in (0, (1+sqrt5)/2)");
  }
  if (j.contains("S")) c.s = prox_choice_from_json(j["S"], w + "/S");
  if (j.contains("T")) c.t = prox_choice_from_json(j["T"], w + "/T");
  if (j.contains("backend")) {
    const Json& b = j["backend"];
    try {
      if (b.contains("u")) c.u_backend = backend_from_string(b["u"].get<std::string>());
      if (b.contains("v")) c.v_backend = backend_from_string(b["v"].get<std::string>());
    } catch (const std::exception& e) {
      schema_error(w + "/backend", e.what());
    }
  }
  auto int_field = [&](const char* key, int fallback, int min_value) {
    if (!j.contains(key)) return fallback;
    const Json& v = j[key];
    if (!v.is_number_integer() || v.get<long long>() < min_value)
      schema_error(w + "/" + key, "expected an integer >= " + std::to_string(min_value));
    return static_cast<int>(v.get<long long>());
  };
  c.max_iters = int_field("max_iters", c.max_iters, 0);
  c.record_every = int_field("record_every", c.record_every, 0);
  c.kkt_tol = number_or(j, "kkt_tol", c.kkt_tol, w);
  if (!(c.kkt_tol >= 0.0)) schema_error(w + "/kkt_tol", "must be >= 0");
  c.divergence_cap = number_or(j, "divergence_cap", c.divergence_cap, w);
  if (!(c.divergence_cap > 0.0)) schema_error(w + "/divergence_cap", "must be positive");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) schema_error(w + "/seed", "expected an unsigned integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  return c;
}

SolverConfig resolve_config(const CoupledProblem& prob, const RunConfig& cfg,
                            std::string* tau_source) {
  SolverConfig sc;
  sc.sigma = cfg.sigma;
  sc.s_op = resolve_prox(prob, cfg.sigma, cfg.s, prob.p, Block::u);
  sc.t_op = resolve_prox(prob, cfg.sigma, cfg.t, prob.q, Block::v);
  sc.u_backend = cfg.u_backend;
  sc.v_backend = cfg.v_backend;
  sc.max_iters = cfg.max_iters;
  sc.kkt_tol = cfg.kkt_tol;
  sc.record_every = cfg.record_every;
  sc.divergence_cap = cfg.divergence_cap;
  if (cfg.tau) {
    sc.tau = *cfg.tau;
    if (tau_source) *tau_source = "config";
  } else {
    // 1.61 when the large-step conditions verify; they do not involve tau.
    sc.tau = 1.61;
    const Solver probe(prob, sc);
    const ConditionReport ii = check_theorem1_case_ii(probe);
    if (!ii.passed) sc.tau = 1.0;
    if (tau_source) *tau_source = "default";
  }
  return sc;
}

// ---------------------------------------------------------------- reports

namespace {

const char* verdict_name(Definiteness d) {
  switch (d) {
    case Definiteness::strict_pd: return "strict_pd";
    case Definiteness::psd: return "psd";
    case Definiteness::indefinite: return "indefinite";
  }
  return "?";
}

Json finite_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

Json to_json(const ConditionReport& r) {
  Json j;
  j["title"] = r.title;
  j["applicable"] = r.applicable;
  j["unverified"] = r.unverified;
  j["passed"] = r.passed;
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    Json ej;
    ej["clause"] = e.clause;
    ej["operator"] = e.name;
    ej["requirement"] = e.strict ? "strict_pd" : "psd";
    ej["lambda_min"] = e.lambda_min;
    ej["lambda_max"] = e.lambda_max;
    ej["margin"] = e.margin;
    ej["verdict"] = e.passed ? verdict_name(e.verdict) : "fail";
    ej["passed"] = e.passed;
    if (!e.passed) ej["min_eigenvector"] = vector_json(e.min_eigenvector);
    entries.push_back(std::move(ej));
  }
  j["entries"] = std::move(entries);
  j["notes"] = r.notes;
  return j;
}

Json to_json(const CertificateReport& r) {
  auto case_json = [](const CertificateCase& c) {
    Json j;
    j["evaluated"] = c.evaluated;
    j["violations"] = c.violations;
    j["worst_excess"] = finite_or_null(c.worst_excess);
    j["worst_slack"] = finite_or_null(c.worst_slack);
    return j;
  };
  Json j;
  j["k"] = r.k;
  j["probes"] = r.probes;
  j["skipped"] = r.skipped;
  j["case_i"] = case_json(r.case_i);
  j["case_ii"] = case_json(r.case_ii);
  j["passed"] = r.passed();
  return j;
}

Json to_json(const ComplexityConstants& k) {
  Json j;
  j["case"] = k.rate_case == RateCase::i ? "i" : "ii";
  j["defined"] = k.defined;
  if (!k.defined) {
    j["refusal"] = k.refusal;
    return j;
  }
  j["norm_A"] = k.norm_a;
  j["norm_B"] = k.norm_b;
  j["C1"] = k.c1;
  j["C2"] = k.c2;
  j["O_hat_ratio"] = k.o_hat_ratio;
  j["BB_ratio"] = k.bb_ratio;
  j["C"] = k.c;
  j["lyapunov_1"] = k.lyapunov_1;
  j["rate_numerator"] = k.rate_numerator;
  j["Phi1"] = k.phi_1;
  j["Psi1"] = k.psi_1;
  j["Xi1"] = k.xi_1;
  j["C3"] = k.c3;
  j["D1"] = k.d1;
  j["C4"] = k.c4;
  j["C5"] = k.c5;
  j["D2"] = k.d2;
  j["Lambda1"] = k.lambda_1;
  j["LambdaBar1"] = k.lambda_bar_1;
  return j;
}

Json to_json(const EnvelopeReport& r) {
  Json j;
  j["samples"] = r.samples;
  j["lower_failures"] = r.lower_failures;
  j["upper_failures"] = r.upper_failures;
  j["worst_violation"] = finite_or_null(r.worst_violation);
  j["max_majorization_gap"] = r.max_majorization_gap;
  j["cross_term_dense"] = r.cross_term_dense;
  j["cross_term_ok"] = r.cross_term_ok;
  j["cross_term_margin"] = finite_or_null(r.cross_term_margin);
  j["cross_term_ratio"] = finite_or_null(r.cross_term_ratio);
  j["cross_term_warnings"] = r.cross_term_warnings;
  j["warnings"] = r.warnings;
  j["passed"] = r.passed();
  return j;
}

// -------------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    schema_error(where, "bad number '" + s + "'");
  return v;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string history_csv(const RunHistory& h) {
  std::ostringstream os;
  os << kHistoryHeader << "\n";
  os << "k,feas,kkt_bound_sq,theta_k,xi_k";
  if (h.has_reference) os << ",phi_k,psi_k";
  os << ",objective,erg_feas\n";
  for (const auto& r : h.rows) {
    os << r.k << ',' << format_double(r.feas) << ',' << format_double(r.kkt_bound_sq)
       << ',' << format_double(r.theta) << ',' << format_double(r.xi);
    if (h.has_reference) os << ',' << format_double(r.phi) << ',' << format_double(r.psi);
    os << ',' << format_double(r.objective) << ',' << format_double(r.erg_feas) << '\n';
  }
  return os.str();
}

HistoryTable parse_history_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kHistoryHeader)
    schema_error("history", "missing or unsupported version line");
  if (lines.size() < 2) schema_error("history", "missing column header");
  HistoryTable t;
  const std::string plain = "k,feas,kkt_bound_sq,theta_k,xi_k,objective,erg_feas";
  const std::string with_ref = "k,feas,kkt_bound_sq,theta_k,xi_k,phi_k,psi_k,objective,erg_feas";
  if (lines[1] == with_ref) {
    t.has_reference = true;
  } else if (lines[1] != plain) {
    schema_error("history", "unexpected columns '" + lines[1] + "'");
  }
  const std::size_t ncol = t.has_reference ? 9 : 7;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split(lines[i], ',');
    const std::string where = "history/line " + std::to_string(i + 1);
    if (cells.size() != ncol) schema_error(where, "wrong number of cells");
    HistoryRow r;
    std::size_t c = 0;
    r.k = static_cast<int>(parse_double(cells[c++], where));
    r.feas = parse_double(cells[c++], where);
    r.kkt_bound_sq = parse_double(cells[c++], where);
    r.theta = parse_double(cells[c++], where);
    r.xi = parse_double(cells[c++], where);
    if (t.has_reference) {
      r.phi = parse_double(cells[c++], where);
      r.psi = parse_double(cells[c++], where);
    }
    r.objective = parse_double(cells[c++], where);
    r.erg_feas = parse_double(cells[c++], where);
    t.rows.push_back(r);
  }
  return t;
}

double RateTable::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  throw Error(ErrorKind::schema, "rate table has no metadata '" + key + "'");
}

std::string rate_csv(const RateTable& t) {
  std::ostringstream os;
  os << kRateHeader << "\n";
  for (const auto& [k, v] : t.metadata) os << "# " << k << "=" << format_double(v) << "\n";
  os << "k,min_bound_sq_times_k,feas_times_k,erg_feas_times_k\n";
  for (const auto& r : t.rows)
    os << r.k << ',' << format_double(r.min_bound_sq_times_k) << ','
       << format_double(r.feas_times_k) << ',' << format_double(r.erg_feas_times_k) << '\n';
  return os.str();
}

RateTable parse_rate_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kRateHeader)
    schema_error("rate", "missing or unsupported version line");
  RateTable t;
  std::size_t i = 1;
  for (; i < lines.size() && lines[i].rfind("# ", 0) == 0; ++i) {
    const auto eq = lines[i].find('=');
    if (eq == std::string::npos) schema_error("rate/line " + std::to_string(i + 1), "bad metadata");
    t.metadata.emplace_back(lines[i].substr(2, eq - 2),
                            parse_double(lines[i].substr(eq + 1), "rate/metadata"));
  }
  if (i >= lines.size() || lines[i] != "k,min_bound_sq_times_k,feas_times_k,erg_feas_times_k")
    schema_error("rate", "unexpected columns");
  for (++i; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split(lines[i], ',');
    const std::string where = "rate/line " + std::to_string(i + 1);
    if (cells.size() != 4) schema_error(where, "wrong number of cells");
    RateRow r;
    r.k = static_cast<int>(parse_double(cells[0], where));
    r.min_bound_sq_times_k = parse_double(cells[1], where);
    r.feas_times_k = parse_double(cells[2], where);
    r.erg_feas_times_k = parse_double(cells[3], where);
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace madmm
