#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "san/error.hpp"
#include "san/io/csv.hpp"
#include "san/io/formats.hpp"
#include "san/io/run.hpp"

using namespace san;
using namespace san::io;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("san_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Copies the study fixture, optionally patched, into a fresh directory.
fs::path study_dir(const std::string& name, const Json& patch = Json::object()) {
  const fs::path d = scratch_dir(name);
  Json cfg = read_json_file(std::string(SAN_FIXTURES) + "/study.json");
  cfg.merge_patch(patch);
  write_json_file((d / "study.json").string(), cfg);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_in(const fs::path& dir, const std::string& command, std::string* err = nullptr) {
  std::ostringstream log, e;
  const int status = run(command, {(dir / "study.json").string(), {}, {}}, log, e);
  if (err) *err = e.str();
  return status;
}

int cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = std::string("\"") + SAN_CLI + "\" " + args + " > \"" + (dir / "stdout.txt").string() +
                          "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
  const int raw = std::system(cmd.c_str());
  return WEXITSTATUS(raw);
}

VariableSpace study_space() {
  return VariableSpace::build({{"x", {"0", "1"}}, {"a", {"lo", "hi"}}, {"b", {"p", "q", "r"}}}, {"a", "b"});
}

}  // namespace

TEST_CASE("CSV reading") {
  std::istringstream in("a,\"b,c\",\"say \"\"hi\"\"\"\r\n\n1,,\"two\nlines\"\n");
  const auto rows = read_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == CsvRow{"a", "b,c", "say \"hi\""});
  CHECK(rows[1] == CsvRow{"1", "", "two\nlines"});
  for (const char* bad : {"a,b\"c\n", "\"a\"b\n", "\"open\n", "a\rb\n"}) {
    std::istringstream b(bad);
    CAPTURE(bad);
    CHECK_THROWS_AS(read_csv(b), Error);
  }
}

TEST_CASE("CSV writing round-trips") {
  const CsvRow row{"plain", "with,comma", "quote\"d", "line\nbreak", ""};
  std::ostringstream out;
  write_csv_row(out, row);
  CHECK(out.str().substr(out.str().size() - 2) == "\r\n");
  std::istringstream in(out.str());
  CHECK(read_csv(in) == std::vector<CsvRow>{row});
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23})
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("space and table JSON") {
  const Json j = Json::parse(R"({"variables":[{"name":"x","levels":["0","1"]},
      {"name":"a","levels":["lo","hi"]},{"name":"b","levels":["p","q","r"]}],"y":["b","a"]})");
  const VariableSpace s = parse_space(j);
  CHECK(s.y_order() == std::vector<int>{2, 1});
  CHECK(parse_space(space_to_json(s)) == s);
  CHECK_THROWS_AS(parse_space(Json::parse(R"({"variables":[{"name":"x","levels":["0","0"]}],"y":[]})")), Error);

  Eigen::VectorXd w(12);
  for (int i = 0; i < 12; ++i) w[i] = i + 1.0;
  const ProbTable t = make_table(s, w);
  const ProbTable back = parse_embedded_table(Json::parse(table_to_json(t).dump()));
  CHECK(back.space() == s);
  CHECK(back.mass() == t.mass());

  const Json cells = Json::parse(R"([{"cells":{"x":"1","a":"hi","b":"r"},"prob":0.75},
      {"x":"0","a":"lo","b":"p","prob":0.25}])");
  const ProbTable sparse = parse_table(cells, s);
  CHECK(sparse[11] == 0.75);
  CHECK(sparse[0] == 0.25);
  CHECK(sparse.mass().sum() == 1.0);
  CHECK_THROWS_AS(parse_table(Json::parse(R"({"mass":[0.5,0.4]})"), s.subspace({"x"})), Error);
}

TEST_CASE("margins in joint and moment form") {
  const VariableSpace ys = study_space().subspace({"a", "b"});
  const Margins joint = parse_margins(Json::parse(R"({"joint":[{"cells":{"a":"hi"},"prob":0.6},
      {"cells":{"a":"lo"},"prob":0.4}]})"), ys);
  REQUIRE(joint.joint);
  CHECK(joint.joint->space().names() == std::vector<std::string>{"a"});
  REQUIRE(joint.moments.size() == 2);
  CHECK(joint.moments[0].name == "1[a=lo]");
  CHECK(joint.moments[0].target == 0.4);
  CHECK_THROWS_AS(parse_margins(Json::parse(R"({"joint":[{"cells":{"a":"hi"},"prob":0.7},
      {"cells":{"a":"lo"},"prob":0.4}]})"), ys), Error);

  const Margins m = parse_margins(Json::parse(R"({"moments":[
      {"name":"share_hi","scope":["a"],"values_by_cell":[0,1],"target":0.6},
      {"scope":["b"],"values_by_cell":[{"cells":{"b":"r"},"value":2.0}],"target":0.5}]})"),
                                  ys);
  REQUIRE(m.moments.size() == 2);
  CHECK(m.moments[0].name == "share_hi");
  CHECK(m.moments[1].u.values() == Eigen::Vector3d(0, 0, 2));
  CHECK_THROWS_AS(parse_margins(Json::parse(R"({"moments":[{"scope":["x"],"values_by_cell":[0,1],"target":0}]})"), ys),
                  Error);
}

TEST_CASE("datasets") {
  const VariableSpace s = study_space();
  const std::vector<CsvRow> rows{{"b", "x", "a"}, {"q", "1", "NA"}, {"NA", "0", "hi"}};
  const Dataset d = parse_dataset(rows, s);
  CHECK(d.row(0) == std::vector<int>{1, kMissing, 1});
  CHECK(d.row(1) == std::vector<int>{0, 1, kMissing});
  std::ostringstream out;
  write_dataset(out, d);
  std::istringstream in(out.str());
  CHECK(parse_dataset(read_csv(in), s) == d);
  const auto report = missingness_report(d);
  CHECK(report[1] == std::pair<std::string, std::string>{"a", "0.5000"});

  CHECK_THROWS_AS(parse_dataset({{"x", "a"}, {"1", "lo"}}, s), Error);
  CHECK_THROWS_AS(parse_dataset({{"x", "a", "b"}, {"1", "mid", "p"}}, s), Error);
  CHECK_THROWS_AS(parse_dataset({{"x", "a", "b"}, {"1", "lo"}}, s), Error);
  CHECK_THROWS_AS(parse_dataset({{"x", "a", "b"}, {"1", "lo", "NA"}}, s, {"b"}), Error);
  CHECK_THROWS_AS(parse_dataset({{"x", "a", "b"}}, s), Error);
}

TEST_CASE("run: the study fixture end to end") {
  const fs::path d = study_dir("end_to_end");
  REQUIRE(run_in(d, "simulate") == 0);
  const Json sim = read_json_file((d / "simulate.json").string());
  CHECK(sim["records"] == 400);
  CHECK(!sim.contains("provenance"));
  CHECK(sim["version"] == kVersion);
  CHECK(sim["command"] == "simulate");

  REQUIRE(run_in(d, "identify") == 0);
  const Json id = read_json_file((d / "identify.json").string());
  CHECK(id["sup_norm"].get<double>() < 1e-6);
  CHECK(id["observed_gap"].get<double>() < 1e-9);
  CHECK(id["steps"] == Json::array({"age", "sex"}));

  REQUIRE(run_in(d, "fit") == 0);
  const Json fit = read_json_file((d / "summary.json").string());
  CHECK(fit["parameters"].size() == 6 + 6 + 3 + 2);
  CHECK(fit["parameters"][0]["name"] == "theta[age=18-34,sex=f]");
  CHECK(fit["parameters"][0]["quantiles"].size() == 3);
  const auto samples = read_csv_file((d / "samples.csv").string());
  CHECK(samples.size() == 1 + 2 * 300);

  REQUIRE(run_in(d, "summarize") == 0);
  const Json re = read_json_file((d / "resummary.json").string());
  CHECK(re["draws"] == 600);
  CHECK(re["parameters"][3]["mean"] == fit["parameters"][3]["mean"]);
  CHECK(re["parameters"][3]["histogram"]["counts"].size() == 10);
}

TEST_CASE("run: identification from a simulated dataset") {
  const fs::path d = study_dir("from_data", Json::parse(R"({"simulate":{"n":3000},
      "identify":{"observed":{"dataset":"data.csv"}}})"));
  REQUIRE(run_in(d, "simulate") == 0);
  REQUIRE(run_in(d, "identify") == 0);
  const Json id = read_json_file((d / "identify.json").string());
  CHECK(id["observed_gap"].get<double>() < 1e-9);
  // sampling error only
  CHECK(id["sup_norm"].get<double>() < 0.05);
}

TEST_CASE("run: projection command") {
  const fs::path d = scratch_dir("project");
  const Json cfg = Json::parse(R"({"project":{
      "q":{"variables":[{"name":"x","levels":["0","1"]},{"name":"y","levels":["0","1"]}],"y":["y"],
           "mass":[0.25,0.25,0.25,0.25]},
      "fixed_marginal":{"variables":["x"],"mass":[0.7,0.3]},
      "moments":[{"scope":["y"],"values_by_cell":[0,1],"target":0.6}],
      "link":"logit","pi":0.4}})");
  write_json_file((d / "study.json").string(), cfg);
  REQUIRE(run_in(d, "project") == 0);
  const Json r = read_json_file((d / "projection.json").string());
  const auto mass = r["table"]["mass"].get<std::vector<double>>();
  CHECK(mass[1] == doctest::Approx(0.42));
  CHECK(r["residuals"]["max"].get<double>() < 1e-10);
  CHECK(r["decomposition_residual"].get<double>() < 1e-6);

  Json bad = cfg;
  bad["project"]["moments"][0]["target"] = 1.5;
  write_json_file((d / "study.json").string(), bad);
  std::string err;
  CHECK(run_in(d, "project", &err) == 3);
  const Json e = Json::parse(err);
  CHECK(e["error"] == "infeasible");
  CHECK(e.contains("message"));
}

TEST_CASE("run: configuration errors exit with status 2") {
  std::string err;
  CHECK(run_in(study_dir("bad_submodel", Json::parse(R"({"submodel":6})")), "simulate", &err) == 2);
  CHECK(Json::parse(err)["error"] == "config");
  CHECK(run_in(study_dir("bad_key", Json::parse(R"({"simulate":{"n":"many"}})")), "simulate", &err) == 2);
  CHECK(Json::parse(err)["subject"] == "n");
  CHECK(run_in(study_dir("no_data"), "fit", &err) == 2);
  CHECK(Json::parse(err)["error"] == "io");
  CHECK(run_in(study_dir("command"), "train", &err) == 2);
}

TEST_CASE("run: same seed, same bytes") {
  std::string first[4];
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path d = study_dir("repeat" + std::to_string(rep));
    REQUIRE(run_in(d, "simulate") == 0);
    REQUIRE(run_in(d, "fit") == 0);
    const std::string files[4] = {slurp(d / "data.csv"), slurp(d / "simulate.json"), slurp(d / "samples.csv"),
                                  slurp(d / "summary.json")};
    for (int k = 0; k < 4; ++k) {
      if (rep == 0) first[k] = files[k];
      else CHECK(files[k] == first[k]);
    }
  }
  const fs::path other = study_dir("other_seed", Json::parse(R"({"seed":8})"));
  REQUIRE(run_in(other, "simulate") == 0);
  CHECK(slurp(other / "data.csv") != first[0]);
}

TEST_CASE("command-line front end") {
  const fs::path d = study_dir("cli");
  CHECK(cli(d, "identify \"" + (d / "study.json").string() + "\"") == 0);
  CHECK(read_json_file((d / "identify.json").string())["sup_norm"].get<double>() < 1e-6);

  CHECK(cli(d, "simulate \"" + (d / "study.json").string() + "\" --seed 99 --out \"" + (d / "alt").string() + "\"") == 0);
  CHECK(read_json_file((d / "alt" / "simulate.json").string())["seed"] == 99);

  const fs::path bad = study_dir("cli_bad", Json::parse(R"({"submodel":6})"));
  CHECK(cli(bad, "fit \"" + (bad / "study.json").string() + "\"") == 2);
  CHECK(Json::parse(slurp(bad / "stderr.txt"))["error"] == "config");
  CHECK(cli(d, "identify /no/such/file.json") == 2);
  CHECK(cli(d, "--version") == 0);
  CHECK(slurp(d / "stdout.txt").find(kVersion) != std::string::npos);
}
