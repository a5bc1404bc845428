// End-to-end tests that drive the installed binary exactly the way a user
// would: real subprocesses, real files, checked exit codes. SCULPTOR_BIN is
// injected by the build so the tests always run the binary they were built
// with.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sculptor/curation.hpp"
#include "sculptor/dataset.hpp"
#include "sculptor/matrix.hpp"
#include "sculptor/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args, const fs::path& capture = {}) {
  std::string cmd = std::string(SCULPTOR_BIN) + " " + args;
  if (capture.empty())
    cmd += " >/dev/null 2>&1";
  else
    cmd += " >" + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

// Fresh workspace per test case, removed on scope exit.
struct Workspace {
  fs::path dir;
  Workspace() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("sculptor_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

// Sixty small random graphs saved as JSONL, the input for most tests.
fs::path write_dataset(const Workspace& ws, std::size_t count = 60) {
  sculptor::Rng rng(1229);
  std::vector<sculptor::GraphRecord> graphs;
  for (std::size_t i = 0; i < count; ++i) {
    sculptor::GraphRecord g;
    g.id = "g" + std::to_string(i);
    g.num_nodes = static_cast<std::uint32_t>(3 + rng.below(10));
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::size_t e = 0; e < 2 * g.num_nodes; ++e) {
      auto u = static_cast<std::uint32_t>(rng.below(g.num_nodes));
      auto v = static_cast<std::uint32_t>(rng.below(g.num_nodes));
      if (u > v) std::swap(u, v);
      edges.insert({u, v});
    }
    g.edges.assign(edges.begin(), edges.end());
    graphs.push_back(std::move(g));
  }
  const fs::path path = ws / "data.jsonl";
  sculptor::Dataset(std::move(graphs)).save(path);
  return path;
}

std::string q(const fs::path& p) { return p.string(); }

}  // namespace

TEST_CASE("featurize writes the binary descriptor matrix deterministically") {
  Workspace ws;
  const auto data = write_dataset(ws);

  CHECK(run("featurize --input " + q(data) + " --output " + q(ws / "s.gsfm")) == 0);
  const auto file = sculptor::read_matrix_file(ws / "s.gsfm");
  CHECK(file.magic == sculptor::kStructMagic);
  CHECK(file.matrix.rows == 60);
  CHECK(file.matrix.cols == 19);  // 3 basic + mean/std for 8 walk steps
  CHECK(file.ids.size() == 60);
  CHECK(file.ids[0] == "g0");

  CHECK(run("featurize --input " + q(data) + " --output " + q(ws / "s2.gsfm")) == 0);
  CHECK(slurp(ws / "s.gsfm") == slurp(ws / "s2.gsfm"));

  // Fewer walk steps shrink the matrix accordingly.
  CHECK(run("featurize --input " + q(data) + " --rw-steps 4 --output " + q(ws / "s4.gsfm")) == 0);
  CHECK(sculptor::read_matrix_file(ws / "s4.gsfm").matrix.cols == 11);
}

TEST_CASE("featurize can emit JSONL rows instead") {
  Workspace ws;
  const auto data = write_dataset(ws, 10);
  CHECK(run("featurize --input " + q(data) + " --format jsonl --output " + q(ws / "s.jsonl")) == 0);

  const auto lines = lines_of(ws / "s.jsonl");
  REQUIRE(lines.size() == 10);
  const auto row = json::parse(lines[3]);
  CHECK(row["id"] == "g3");
  CHECK(row["struct"].size() == 19);

  CHECK(run("featurize --input " + q(data) + " --format yaml --output " + q(ws / "x")) == 1);
}

TEST_CASE("embed produces hash embeddings and honors the dimension") {
  Workspace ws;
  const auto data = write_dataset(ws, 20);
  CHECK(run("embed --input " + q(data) + " --dim 32 --output " + q(ws / "e.gsem")) == 0);

  const auto file = sculptor::read_matrix_file(ws / "e.gsem");
  CHECK(file.magic == sculptor::kEmbeddingMagic);
  CHECK(file.matrix.rows == 20);
  CHECK(file.matrix.cols == 32);

  CHECK(run("embed --input " + q(data) + " --dim 32 --output " + q(ws / "e2.gsem")) == 0);
  CHECK(slurp(ws / "e.gsem") == slurp(ws / "e2.gsem"));
}

TEST_CASE("embed round-trips precomputed embeddings") {
  Workspace ws;
  const auto data = write_dataset(ws, 8);
  CHECK(run("embed --input " + q(data) + " --dim 16 --output " + q(ws / "e.gsem")) == 0);
  // Feed the binary output back in as the precomputed source.
  CHECK(run("embed --input " + q(data) + " --provider precomputed --source " + q(ws / "e.gsem") +
            " --output " + q(ws / "e3.gsem")) == 0);
  CHECK(slurp(ws / "e.gsem") == slurp(ws / "e3.gsem"));

  // precomputed without --source is a usage error.
  CHECK(run("embed --input " + q(data) + " --provider precomputed --output " + q(ws / "x")) == 1);
}

TEST_CASE("select emits a sealed manifest plus optional id list and dump") {
  Workspace ws;
  const auto data = write_dataset(ws);
  REQUIRE(run("featurize --input " + q(data) + " --output " + q(ws / "s.gsfm")) == 0);
  REQUIRE(run("embed --input " + q(data) + " --dim 16 --output " + q(ws / "e.gsem")) == 0);

  CHECK(run("select --input " + q(ws / "s.gsfm") + " --semantic " + q(ws / "e.gsem") +
            " --output " + q(ws / "m.json") + " --ids-out " + q(ws / "ids.txt") +
            " --dump-clustering " + q(ws / "c.json") + " --ratio 0.2 --seed 7") == 0);

  // parse_manifest re-validates the checksum, so this is the integrity check.
  const auto manifest = sculptor::parse_manifest(slurp(ws / "m.json"));
  CHECK(manifest.m_target == 12);
  CHECK(manifest.selected_ids.size() == 12);
  CHECK(manifest.seed == 7);

  const auto ids = lines_of(ws / "ids.txt");
  CHECK(ids == manifest.selected_ids);

  const auto clustering = json::parse(slurp(ws / "c.json"));
  CHECK(clustering.contains("objective"));
  CHECK(clustering["assignments"].size() == 60);

  // Reruns, with or without an explicit thread cap, are byte-identical.
  CHECK(run("select --input " + q(ws / "s.gsfm") + " --semantic " + q(ws / "e.gsem") +
            " --output " + q(ws / "m2.json") + " --ratio 0.2 --seed 7") == 0);
  CHECK(slurp(ws / "m.json") == slurp(ws / "m2.json"));
  CHECK(run("select --input " + q(ws / "s.gsfm") + " --semantic " + q(ws / "e.gsem") +
            " --output " + q(ws / "m3.json") + " --ratio 0.2 --seed 7 --threads 1") == 0);
  CHECK(slurp(ws / "m.json") == slurp(ws / "m3.json"));

  // A different seed moves the selection.
  CHECK(run("select --input " + q(ws / "s.gsfm") + " --semantic " + q(ws / "e.gsem") +
            " --output " + q(ws / "m4.json") + " --ratio 0.2 --seed 8") == 0);
  CHECK(sculptor::parse_manifest(slurp(ws / "m4.json")).selected_ids != manifest.selected_ids);
}

TEST_CASE("select works from structural features alone") {
  Workspace ws;
  const auto data = write_dataset(ws, 30);
  REQUIRE(run("featurize --input " + q(data) + " --output " + q(ws / "s.gsfm")) == 0);
  CHECK(run("select --input " + q(ws / "s.gsfm") + " --output " + q(ws / "m.json") +
            " --ratio 0.5 --min-quota --sigma-mode infinite") == 0);
  const auto manifest = sculptor::parse_manifest(slurp(ws / "m.json"));
  CHECK(manifest.selected_ids.size() == 15);
  CHECK(manifest.config.min_quota);
  CHECK(manifest.config.sigma_mode == sculptor::SigmaMode::infinite);
}

TEST_CASE("options can come from a config file") {
  Workspace ws;
  const auto data = write_dataset(ws);
  REQUIRE(run("featurize --input " + q(data) + " --output " + q(ws / "s.gsfm")) == 0);

  std::ofstream(ws / "select.toml") << "threads=1\n[select]\nratio=0.25\nseed=99\nclusters=4\n";
  CHECK(run("select --config " + q(ws / "select.toml") + " --input " + q(ws / "s.gsfm") +
            " --output " + q(ws / "m.json")) == 0);
  const auto manifest = sculptor::parse_manifest(slurp(ws / "m.json"));
  CHECK(manifest.m_target == 15);  // 0.25 * 60
  CHECK(manifest.seed == 99);
  CHECK(manifest.clusters.size() == 4);

  // Command-line flags win over the file, and --config may precede the
  // subcommand as well.
  CHECK(run("--config " + q(ws / "select.toml") + " select --seed 123 --input " + q(ws / "s.gsfm") +
            " --output " + q(ws / "m2.json")) == 0);
  const auto override_manifest = sculptor::parse_manifest(slurp(ws / "m2.json"));
  CHECK(override_manifest.seed == 123);
  CHECK(override_manifest.m_target == 15);

  CHECK(run("select --config " + q(ws / "nonexistent.toml") + " --input " + q(ws / "s.gsfm") +
            " --output " + q(ws / "x")) == 1);
}

TEST_CASE("stats validates the manifest against the dataset") {
  Workspace ws;
  const auto data = write_dataset(ws);
  REQUIRE(run("featurize --input " + q(data) + " --output " + q(ws / "s.gsfm")) == 0);
  REQUIRE(run("select --input " + q(ws / "s.gsfm") + " --output " + q(ws / "m.json") +
              " --ratio 0.2") == 0);

  CHECK(run("stats --input " + q(ws / "m.json") + " --dataset " + q(data), ws / "out.txt") == 0);
  const auto out = slurp(ws / "out.txt");
  CHECK(out.find("budget check") != std::string::npos);
  CHECK(out.find("ok") != std::string::npos);

  // Flip one selected id: the checksum catches it before any deeper check.
  auto doc = json::parse(slurp(ws / "m.json"));
  doc["selected_ids"][0] = "g999";
  std::ofstream(ws / "tampered.json") << doc.dump(2) << "\n";
  CHECK(run("stats --input " + q(ws / "tampered.json") + " --dataset " + q(data),
            ws / "err.txt") == 2);
  CHECK(slurp(ws / "err.txt").find("checksum mismatch") != std::string::npos);

  // A manifest from one dataset checked against another: unknown ids.
  const auto other = ws / "other.jsonl";
  {
    std::ofstream out_ds(other);
    out_ds << R"({"id": "solo", "num_nodes": 2, "edges": [[0, 1]]})" << "\n";
  }
  CHECK(run("stats --input " + q(ws / "m.json") + " --dataset " + q(other), ws / "err2.txt") == 2);
  CHECK(slurp(ws / "err2.txt").find("not in dataset") != std::string::npos);
}

TEST_CASE("baselines write id lists of the right size") {
  Workspace ws;
  const auto data = write_dataset(ws, 40);
  REQUIRE(run("featurize --input " + q(data) + " --output " + q(ws / "s.gsfm")) == 0);
  REQUIRE(run("embed --input " + q(data) + " --dim 8 --output " + q(ws / "e.gsem")) == 0);

  const auto dataset = sculptor::Dataset::load(data);
  for (const std::string method : {"random", "kcenter", "herding"}) {
    const auto out = ws / (method + ".txt");
    CHECK(run("baseline --method " + method + " --input " + q(ws / "s.gsfm") + " --semantic " +
              q(ws / "e.gsem") + " --output " + q(out) + " --ratio 0.25 --seed 3") == 0);
    const auto ids = lines_of(out);
    CHECK(ids.size() == 10);
    std::set<std::string> unique(ids.begin(), ids.end());
    CHECK(unique.size() == 10);
    for (const auto& id : ids) CHECK(dataset.find(id).has_value());

    const auto rerun = ws / (method + "_2.txt");
    CHECK(run("baseline --method " + method + " --input " + q(ws / "s.gsfm") + " --semantic " +
              q(ws / "e.gsem") + " --output " + q(rerun) + " --ratio 0.25 --seed 3") == 0);
    CHECK(slurp(out) == slurp(rerun));
  }
}

TEST_CASE("verify-bound writes a passing report and optional CSV") {
  Workspace ws;
  CHECK(run("verify-bound --m 300 --k 3 --dim 4 --target 30 --trials 500 --simplex 100 "
            "--extra-allocations 1 --output " +
                q(ws / "report.json") + " --csv " + q(ws / "report.csv"),
            ws / "out.txt") == 0);

  const auto report = json::parse(slurp(ws / "report.json"));
  CHECK(report["pass"].get<bool>());
  CHECK(report["remark_pass"].get<bool>());
  CHECK(report["records"].size() == 6);  // (uniform + optimal + 1 extra) x 2 modes
  CHECK(report["simplex_checks"].get<int>() == 100);

  const auto csv = lines_of(ws / "report.csv");
  REQUIRE(!csv.empty());
  CHECK(csv[0] == "record,mode,bound,gap_mean,gap_ci99,pass");
  CHECK(csv.size() == 7);

  CHECK(slurp(ws / "out.txt").find("PASS") != std::string::npos);
}

TEST_CASE("exit codes distinguish usage, validation, and service failures") {
  Workspace ws;
  const auto data = write_dataset(ws, 10);
  REQUIRE(run("featurize --input " + q(data) + " --output " + q(ws / "s.gsfm")) == 0);

  // Usage errors: bad flags or bad flag values.
  CHECK(run("") == 1);                                        // no subcommand
  CHECK(run("featurize --input x") == 1);                     // missing required --output
  CHECK(run("select --no-such-flag") == 1);
  CHECK(run("baseline --method sorcery --input " + q(ws / "s.gsfm") + " --output " +
            q(ws / "x")) == 1);
  CHECK(run("verify-bound --trials 0 --output " + q(ws / "x")) == 1);
  CHECK(run("select --input " + q(ws / "s.gsfm") + " --output " + q(ws / "x") +
            " --sigma-mode sideways") == 2);                  // validation, not parse

  // Validation errors: well-formed invocation, bad data.
  CHECK(run("featurize --input " + q(ws / "missing.jsonl") + " --output " + q(ws / "x")) == 2);
  CHECK(run("select --input " + q(ws / "s.gsfm") + " --output " + q(ws / "x") +
            " --ratio 1.5") == 2);

  // Mismatched id sets between the two feature files.
  const auto other = ws / "other.jsonl";
  {
    std::ofstream out_ds(other);
    out_ds << R"({"id": "zz", "num_nodes": 2, "edges": [[0, 1]]})" << "\n";
  }
  REQUIRE(run("embed --input " + q(other) + " --dim 8 --output " + q(ws / "zz.gsem")) == 0);
  CHECK(run("select --input " + q(ws / "s.gsfm") + " --semantic " + q(ws / "zz.gsem") +
            " --output " + q(ws / "x"), ws / "err.txt") == 2);
  CHECK(slurp(ws / "err.txt").find("id mismatch") != std::string::npos);

  // Service errors: the remote provider cannot reach anything.
  CHECK(run("embed --input " + q(data) + " --provider remote --endpoint http://127.0.0.1:1/v "
            "--timeout 2 --output " + q(ws / "x")) == 3);
}
