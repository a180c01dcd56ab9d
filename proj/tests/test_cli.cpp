#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path scratch = fs::path(HETLINK_SCRATCH_DIR) / "cli";

int run_cli(const std::string& args) {
    std::string cmd = std::string("\"") + HETLINK_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream(path) << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

} // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("train quantum") == 2);
    CHECK(run_cli("--help") == 0);
}

TEST_CASE("generate, ingest and build-graph") {
    fs::remove_all(scratch / "gen");
    write_file(scratch / "small.cfg", "data.n_trials=60\n");
    CHECK(run_cli("generate --config " + q(scratch / "small.cfg") + " --seed 3 --out " + q(scratch / "gen")) == 0);
    REQUIRE(fs::exists(scratch / "gen" / "trials.csv"));

    CHECK(run_cli("ingest " + q(scratch / "gen" / "trials.csv") + " --out " + q(scratch / "ingested")) == 0);
    CHECK(read_file(scratch / "ingested" / "trials.csv") == read_file(scratch / "gen" / "trials.csv"));
    CHECK(read_file(scratch / "ingested" / "vocabulary.tsv").rfind("family\tterm\n", 0) == 0);

    CHECK(run_cli("build-graph knowledge --data " + q(scratch / "gen" / "trials.csv") + " --out " +
                  q(scratch / "kg")) == 0);
    CHECK(fs::exists(scratch / "kg" / "nodes.tsv"));
    CHECK(fs::exists(scratch / "kg" / "edges.tsv"));
}

TEST_CASE("data errors exit with 1") {
    write_file(scratch / "bad.csv", "NCT_id,Trial ID,Disease,MeSH Term\nNCT1,1,flu,Influenza\n");
    CHECK(run_cli("ingest " + q(scratch / "bad.csv") + " --out " + q(scratch / "bad_out")) == 1);
    write_file(scratch / "bad_scores.tsv", "a\tb\tlabel\tscore\nx\ty\t7\t0.5\n");
    CHECK(run_cli("evaluate " + q(scratch / "bad_scores.tsv") + " --out " + q(scratch / "bad_out")) == 1);
}

TEST_CASE("config errors exit with 2") {
    write_file(scratch / "unknown.cfg", "walk.nonsense=1\n");
    CHECK(run_cli("build-graph binodal --config " + q(scratch / "unknown.cfg") + " --out " + q(scratch / "x")) == 2);
    write_file(scratch / "badvalue.cfg", "data.n_trials=many\n");
    CHECK(run_cli("generate --config " + q(scratch / "badvalue.cfg") + " --out " + q(scratch / "x")) == 2);
}

TEST_CASE("evaluate and compare") {
    write_file(scratch / "scores.tsv", "a\tb\tlabel\tscore\nt1\tx\t1\t0.9\nt2\tx\t1\t0.4\nt3\tx\t0\t0.6\nt4\tx\t0\t0.2\n");
    CHECK(run_cli("evaluate " + q(scratch / "scores.tsv") + " --out " + q(scratch / "eval")) == 0);
    CHECK(read_file(scratch / "eval" / "roc.tsv").find("# auc=0.75\n") != std::string::npos);

    write_file(scratch / "report.tsv", "method\tclassifier\tseed\tauc\nmetapath\tlogreg\t1\t0.857\n"
                                       "metapath\tlogreg\t2\t0.857\nmetapath\tlogreg\t3\t0.848\n");
    CHECK(run_cli("compare " + q(scratch / "report.tsv") + " --out " + q(scratch / "cmp")) == 0);
    CHECK(read_file(scratch / "cmp" / "compare.tsv") ==
          "method\tclassifier\trun_1\trun_2\trun_3\tmean\tsd\nmetapath\tlogreg\t0.857\t0.857\t0.848\t0.854\t0.005\n");
}

TEST_CASE("train writes reports") {
    write_file(scratch / "train.cfg", "data.n_trials=120\nseeds=1\nskipgram.dim=8\nskipgram.epochs=1\nwalk.walk_length=10\n");
    fs::remove_all(scratch / "train");
    CHECK(run_cli("train array --config " + q(scratch / "train.cfg") + " --out " + q(scratch / "train")) == 0);
    auto report = read_file(scratch / "train" / "report.tsv");
    CHECK(report.rfind("method\tclassifier\tseed\tauc", 0) == 0);
    CHECK(fs::exists(scratch / "train" / "compare.tsv"));
    CHECK(fs::exists(scratch / "train" / "roc" / "array_logreg_1.tsv"));
    CHECK(fs::exists(scratch / "train" / "scores" / "array_logreg_1.tsv"));
}
