#include "madmm/cli.hpp"
#include "madmm/io.hpp"

#include "oracles/oracle.hpp"
#include "support/corpus.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

using namespace madmm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = run_cli(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

int spawn(const std::string& args) {
  const int status = std::system((std::string(MADMM_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("madmm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string file(const std::string& name, const std::string& text) const {
    const std::string p = (dir_ / name).string();
    write_text_file(p, text);
    return p;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string instance(const InstanceData& d, const std::string& name = "inst.json") const {
    return file(name, dump(to_json(d)));
  }
  std::string config(const RunConfig& c, const std::string& name = "cfg.json") const {
    return file(name, dump(to_json(c)));
  }
  std::string tiny() const { return instance(make_analytic_tiny()); }

  fs::path dir_;
};

RunConfig with_tau(double tau) {
  RunConfig c;
  c.tau = tau;
  return c;
}

}  // namespace

TEST_F(Cli, GenerateTinyEmbedsSolutionAndIsDeterministic) {
  const std::string spec = file("spec.json", R"({"family": "analytic_tiny"})");
  const Outcome a = cli({"generate", spec});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const InstanceData d = instance_from_json(parse_json(a.out, "out"));
  ASSERT_TRUE(d.solution);
  EXPECT_EQ(d.solution->u(0), 0.5);
  EXPECT_EQ(d.solution->x(0), -0.5);
  EXPECT_EQ(cli({"generate", spec}).out, a.out);

  ASSERT_EQ(cli({"generate", spec, "-o", path("t.json")}).code, kExitOk);
  EXPECT_EQ(read_text_file(path("t.json")), a.out);
}

TEST_F(Cli, GenerateRejectsMalformedDims) {
  const std::string spec =
      file("spec.json", R"({"family": "quadratic_coupled", "dims": {"u": 3, "v": "x"}})");
  const Outcome o = cli({"generate", spec});
  EXPECT_EQ(o.code, kExitInputError);
  EXPECT_NE(o.err.find("dims"), std::string::npos) << o.err;
  EXPECT_EQ(cli({"generate", path("missing.json")}).code, kExitInputError);
}

TEST_F(Cli, CheckExitCodes) {
  const std::string inst = tiny();
  const Outcome ok = cli({"check", inst, config(with_tau(1.0))});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  const Json j = parse_json(ok.out, "check");
  EXPECT_EQ(j["format"], "madmm-check v1");
  EXPECT_TRUE(j["passed"].get<bool>());

  const Outcome t2 = cli({"check", inst, config(with_tau(1.0)), "--theorem", "2"});
  EXPECT_EQ(t2.code, kExitOk);
  bool found = false;
  const Json t2j = parse_json(t2.out, "check");
  for (const auto& r : t2j["reports"])
    for (const auto& e : r["entries"])
      if (e["clause"] == "theorem2.case_i.O1") {
        EXPECT_DOUBLE_EQ(e["lambda_min"].get<double>(), 0.25);
        found = true;
      }
  EXPECT_TRUE(found);

  // Zero operators: the u-subproblem system is singular.
  InstanceData z;
  z.family = Family::separable_recovery;
  z.coupling = SmoothCoupling::Kind::zero;
  z.a = Matrix::Zero(2, 2);
  z.b = Matrix::Identity(2, 2);
  z.c = Vector::Ones(2);
  z.p = ProxTerm::zero(2);
  z.q = ProxTerm::zero(2);
  const Outcome bad = cli({"check", instance(z, "zero.json"), config(with_tau(1.0))});
  EXPECT_EQ(bad.code, kExitConditionFailed);
  EXPECT_NE(bad.out.find("min_eigenvector"), std::string::npos);

  EXPECT_EQ(cli({"check", inst, config(with_tau(1.0)), "--cap", "1"}).code, kExitUnverified);
  EXPECT_EQ(cli({"check", inst, config(with_tau(1.6)), "--theorem", "1i"}).code,
            kExitConditionFailed);
}

TEST_F(Cli, SolveTinyReachesClosedForm) {
  const Outcome o = cli({"solve", tiny(), config(with_tau(1.0)), "--tol", "1e-11"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const Json j = parse_json(o.out, "summary");
  EXPECT_EQ(j["status"], "converged");
  EXPECT_NEAR(j["final"]["u"][0].get<double>(), 0.5, 1e-9);
  EXPECT_NEAR(j["final"]["v"][0].get<double>(), 0.5, 1e-9);
  EXPECT_NEAR(j["final"]["x"][0].get<double>(), -0.5, 1e-9);
  EXPECT_FALSE(j.contains("wall_time_s"));
  EXPECT_TRUE(parse_json(cli({"solve", tiny(), config(with_tau(1.0)), "--timing"}).out, "s")
                  .contains("wall_time_s"));
}

TEST_F(Cli, SolveWritesHistoryAndSummary) {
  const std::string inst = tiny();
  const std::string ref = file("ref.json", R"({"u": [0.5], "v": [0.5], "x": [-0.5]})");
  const Outcome o = cli({"solve", inst, config(with_tau(1.0)), "--out", path("run"),
                         "--reference", ref, "--max-iters", "40"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const Json s = parse_json(read_text_file(path("run/summary.json")), "s");
  const HistoryTable h = parse_history_csv(read_text_file(path("run/history.csv")));
  EXPECT_TRUE(h.has_reference);
  EXPECT_EQ(h.rows.size(), s["history_rows"].get<std::size_t>());
  EXPECT_TRUE(s["verdicts"]["monotonicity"]["phi"]["passed"].get<bool>());
  for (std::size_t i = 1; i < h.rows.size(); ++i) EXPECT_LE(h.rows[i].phi, h.rows[i - 1].phi + 1e-12);
}

TEST_F(Cli, ZeroIterationsGiveEmptyHistory) {
  const Outcome o = cli({"solve", tiny(), config(with_tau(1.0)), "--max-iters", "0", "--out",
                         path("run")});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const HistoryTable h = parse_history_csv(read_text_file(path("run/history.csv")));
  EXPECT_TRUE(h.rows.empty());
  const Json s = parse_json(read_text_file(path("run/summary.json")), "s");
  EXPECT_EQ(s["iterations"], 0);
  EXPECT_EQ(s["final"]["u"][0].get<double>(), 0.0);
}

TEST_F(Cli, SeparableHistoryMatchesTextbookAdmm) {
  const InstanceData d = corpus::cases()[12].data;
  RunConfig c = with_tau(1.0);
  c.max_iters = 30;
  c.kkt_tol = 0.0;
  c.record_every = 1;
  ASSERT_EQ(cli({"solve", instance(d), config(c), "--out", path("run")}).code, kExitOk);
  const HistoryTable h = parse_history_csv(read_text_file(path("run/history.csv")));
  const auto ref = oracle::textbook_admm(d, 1.0, 1.0, 30);
  ASSERT_EQ(h.rows.size(), 30u);
  for (int k = 1; k <= 30; ++k) {
    const auto& it = ref[static_cast<std::size_t>(k)];
    const double feas = (d.a.transpose() * it.u + d.b.transpose() * it.v - d.c).norm();
    const double obj = d.p.value(it.u) + d.q.value(it.v);
    EXPECT_NEAR(h.rows[k - 1].feas, feas, 1e-10) << k;
    EXPECT_NEAR(h.rows[k - 1].objective, obj, 1e-10) << k;
  }
}

TEST_F(Cli, DivergenceAndConditionGate) {
  RunConfig c = with_tau(1.0);
  c.divergence_cap = 0.1;
  const Outcome d = cli({"solve", tiny(), config(c)});
  EXPECT_EQ(d.code, kExitDiverged);
  const Json j = parse_json(d.out, "s");
  EXPECT_EQ(j["status"], "diverged");
  EXPECT_EQ(j["diverged_at"], 1);

  // Unshifted automatic operators with a large step fail the conditions.
  const std::string pp = instance(corpus::cases()[8].data, "pp.json");
  RunConfig big = with_tau(1.61);
  big.s = ProxChoice{ProxChoice::Kind::automatic};
  big.t = ProxChoice{ProxChoice::Kind::automatic};
  big.max_iters = 20;
  const std::string cfg = config(big, "big.json");
  EXPECT_EQ(cli({"solve", pp, cfg}).code, kExitConditionFailed);
  const Outcome forced = cli({"solve", pp, cfg, "--force"});
  EXPECT_NE(forced.code, kExitConditionFailed);
  EXPECT_TRUE(parse_json(forced.out, "s")["verdicts"]["conditions"]["forced"].get<bool>());
}

TEST_F(Cli, RateStudyRows) {
  const std::string o = path("rate.csv");
  const Outcome r = cli({"rate-study", tiny(), config(with_tau(1.0)), "--kmax", "50", "-o", o});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("reference: instance"), std::string::npos);
  const RateTable t = parse_rate_csv(read_text_file(o));
  ASSERT_EQ(t.rows.size(), 50u);
  EXPECT_EQ(t.rows.front().k, 1);
  EXPECT_EQ(t.meta("defined"), 1.0);
  EXPECT_NEAR(t.meta("C"), 142.0, 1e-8);
  for (const RateRow& row : t.rows) {
    EXPECT_LE(row.min_bound_sq_times_k, t.meta("C_times_lyapunov_1"));
    if (std::isfinite(row.erg_feas_times_k)) EXPECT_LE(row.erg_feas_times_k, t.meta("D1"));
  }
}

TEST_F(Cli, CertifyBranches) {
  const std::string inst = tiny();
  const Outcome lo = cli({"certify", inst, config(with_tau(0.5)), "--probes", "50", "--iters", "10"});
  ASSERT_EQ(lo.code, kExitOk) << lo.err;
  const Json a = parse_json(lo.out, "c");
  EXPECT_TRUE(a["case_i"]["evaluated"].get<bool>());
  EXPECT_TRUE(a["case_ii"]["evaluated"].get<bool>());
  EXPECT_EQ(a["steps"], 10);

  const Outcome hi = cli({"certify", inst, config(with_tau(1.61), "c2.json"), "--probes", "50",
                          "--iters", "10"});
  ASSERT_EQ(hi.code, kExitOk) << hi.err;
  const Json b = parse_json(hi.out, "c");
  EXPECT_FALSE(b["case_i"]["evaluated"].get<bool>());
  EXPECT_TRUE(b["case_ii"]["evaluated"].get<bool>());
  EXPECT_TRUE(b["passed"].get<bool>());
}

TEST_F(Cli, OutputsAreByteIdenticalAcrossRuns) {
  const std::string inst = instance(corpus::cases()[4].data);
  RunConfig c;
  c.max_iters = 50;
  const std::string cfg = config(c);
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"check", inst, cfg},
           {"solve", inst, cfg},
           {"certify", inst, cfg, "--probes", "20", "--iters", "5", "--seed", "3"}})
    EXPECT_EQ(cli(args).out, cli(args).out) << args[0];
}

TEST_F(Cli, ProcessExitCodes) {
  EXPECT_EQ(spawn(""), kExitInputError);
  EXPECT_EQ(spawn("--help"), kExitOk);
  EXPECT_EQ(spawn("frobnicate"), kExitInputError);
  EXPECT_EQ(spawn("check '" + tiny() + "' '" + config(with_tau(1.0)) + "'"), kExitOk);
  EXPECT_EQ(spawn("solve '" + tiny() + "' '" + path("nope.json") + "'"), kExitInputError);
}
