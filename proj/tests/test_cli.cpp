#include <doctest.h>

#include "fixtures.hpp"

#include <cstdlib>
#include <string>
#include <sys/wait.h>

using namespace fixtures;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

// Runs the command-line tool with `args`, capturing both streams.
Run cli(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = env + " '" + std::string(POLYGMDH_CLI) + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  const auto dir = scratch("cli_codes");
  CHECK(cli(dir, "synth eeg --channels 2 --duration 2 --recordings 2 --out " + q(dir / "c"))
            .status == 0);
  CHECK(cli(dir, "features " + q(dir / "c" / "rec_001.csv")).status == 2);
  CHECK(cli(dir, "features --rate 128 --bands risk6 " + q(dir / "c" / "rec_001.csv")).status ==
        0);
  CHECK(cli(dir, "train " + q(dir / "c" / "features.csv") +
                     " --fitter proj --chi 2.5 --out " + q(dir / "m"))
            .status == 2);
  CHECK(cli(dir, "train --bogus").status == 2);
  CHECK(cli(dir, "predict " + q(dir / "absent.model") + " x.csv").status == 2);

  spit(dir / "flat.csv", "a,b,label\n1,2,0\n1,2,1\n1,2,0\n1,2,1\n1,2,0\n1,2,1\n");
  const auto degenerate = cli(dir, "train " + q(dir / "flat.csv") + " --out " + q(dir / "m"));
  CHECK(degenerate.status == 3);
  CHECK_FALSE(degenerate.err.empty());

  spit(dir / "rule.model", serialize(alzheimer_rule()));
  spit(dir / "short.csv", "x11,x69,x76\n0,0,0\n");
  const auto missing = cli(dir, "predict " + q(dir / "rule.model") + " " + q(dir / "short.csv"));
  CHECK(missing.status == 3);
  CHECK(missing.err.find("x73") != std::string::npos);
}

TEST_CASE("predict prints accuracy only for labelled input") {
  const auto dir = scratch("cli_predict");
  spit(dir / "rule.model", serialize(alzheimer_rule()));
  spit(dir / "zeros.csv", "x11,x69,x73,x76\n0,0,0,0\n");
  const auto plain = cli(dir, "predict " + q(dir / "rule.model") + " " + q(dir / "zeros.csv"));
  CHECK(plain.status == 0);
  CHECK(plain.out == "row,score,class\n1,0.796668,1\n");
  CHECK(plain.err.find("accuracy") == std::string::npos);

  spit(dir / "labelled.csv", "x11,x69,x73,x76,label\n0,0,0,0,1\n0,0,0,0,0\n");
  const auto scored =
      cli(dir, "predict " + q(dir / "rule.model") + " " + q(dir / "labelled.csv"));
  CHECK(scored.status == 0);
  CHECK(scored.err.find("accuracy 0.5000 (1 of 2 correct)") != std::string::npos);
}

TEST_CASE("synth, features, train, rules round trip") {
  const auto dir = scratch("cli_flow");
  const auto c = dir / "c";
  REQUIRE(cli(dir, "--seed 3 synth eeg --channels 3 --duration 4 --recordings 3 --overlap 0.3 "
                   "--out " + q(c)).status == 0);
  const auto feats = cli(dir, "features --rate 128 --manifest " + q(c / "manifest.csv"));
  REQUIRE(feats.status == 0);
  CHECK(feats.out == slurp(c / "features.csv"));

  const auto train = cli(dir, "--seed 1 train " + q(c / "features.csv") +
                                  " --method chain --pca 0.92 --out " + q(dir / "a.model"));
  REQUIRE(train.status == 0);
  CHECK(train.out.find("PCA components retained: ") != std::string::npos);
  CHECK(train.out.find("The number of errors") != std::string::npos);

  const auto wide = cli(dir, "--seed 1 --threads 8 train " + q(c / "features.csv") +
                                 " --method chain --pca 0.92 --out " + q(dir / "b.model"));
  REQUIRE(wide.status == 0);
  CHECK(slurp(dir / "a.model") == slurp(dir / "b.model"));

  const auto env = cli(dir, "train " + q(c / "features.csv") +
                                " --method chain --pca 0.92 --out " + q(dir / "e.model"),
                       "POLYGMDH_SEED=1");
  REQUIRE(env.status == 0);
  CHECK(slurp(dir / "e.model") == slurp(dir / "a.model"));

  const auto rules = cli(dir, "rules " + q(dir / "a.model"));
  CHECK(rules.status == 0);
  CHECK(rules.out.rfind("y_1^{(1)} = ", 0) == 0);
}

TEST_CASE("seed changes the split") {
  const auto dir = scratch("cli_seed");
  const auto c = dir / "c";
  REQUIRE(cli(dir, "synth poly --depth 2 --m 5 --rows 200 --out " + q(c)).status == 0);
  REQUIRE(cli(dir, "--seed 1 train " + q(c / "poly.csv") + " --out " + q(dir / "a")).status == 0);
  REQUIRE(cli(dir, "--seed 2 train " + q(c / "poly.csv") + " --out " + q(dir / "b")).status == 0);
  CHECK(slurp(dir / "a") != slurp(dir / "b"));
  CHECK(cli(dir, "train " + q(c / "poly.csv") + " --out " + q(dir / "x"), "POLYGMDH_SEED=abc")
            .status == 2);
}

}
