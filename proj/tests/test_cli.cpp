#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = REPCOUNT_TEST_TMP;
const fs::path kData = REPCOUNT_DATA_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int exit_code;
    std::string out;
    std::string err;
};

Run cli(const std::string& args, const std::string& tag) {
    fs::create_directories(kTmp);
    const fs::path out = kTmp / (tag + ".stdout");
    const fs::path err = kTmp / (tag + ".stderr");
    const std::string cmd =
        std::string("\"") + REPCOUNT_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

fs::path fresh(const std::string& name) {
    const fs::path dir = kTmp / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("synth, count and eval agree on a clean clip") {
    const fs::path dir = fresh("e2e");
    const std::string d = dir.string();
    REQUIRE(cli("synth --template squat --reps 3 --period 30 --out-dir " + d + "/clips", "e2e_synth").exit_code == 0);
    CHECK(fs::exists(dir / "clips" / "squat.lmjsonl"));
    CHECK(fs::exists(dir / "clips" / "annotations.csv"));

    const Run count = cli("count --landmarks " + d + "/clips --annotations " + d + "/clips/annotations.csv --out-dir " +
                              d + "/count",
                          "e2e_count");
    REQUIRE(count.exit_code == 0);
    CHECK(count.out == "squat count=3\n");
    CHECK(slurp(dir / "count" / "counts.csv").find("squat,squat,3,NEUTRAL,") != std::string::npos);
    CHECK(fs::exists(dir / "count" / "density" / "squat.csv"));

    const Run eval = cli("eval --annotations " + d + "/clips/annotations.csv --predictions " + d +
                             "/count/counts.csv --mode avg5 --out-dir " + d + "/eval",
                         "e2e_eval");
    REQUIRE(eval.exit_code == 0);
    CHECK(eval.out == "mode=avg5 n_videos=1 mae=0.000000 obo=1.000000 ledger=none\n");
    CHECK(slurp(dir / "eval" / "eval_summary.txt") == eval.out);
    CHECK(slurp(dir / "eval" / "eval_report.csv") == "video_id,gt,pred,norm_err,within_one\nsquat,3,3,0.000000,true\n");
}

TEST_CASE("validate reports the failing line of a truncated file") {
    const fs::path dir = fresh("validate");
    REQUIRE(cli("synth --reps 1 --period 8 --out-dir " + dir.string(), "validate_synth").exit_code == 0);
    const std::string text = slurp(dir / "squat.lmjsonl");
    CHECK(cli("validate " + (dir / "squat.lmjsonl").string(), "validate_ok").exit_code == 0);

    const std::size_t cut = text.find('\n', text.find('\n') + 1) + 50;  // middle of line 3
    std::ofstream(dir / "broken.lmjsonl", std::ios::binary) << text.substr(0, cut);
    const Run r = cli("validate " + (dir / "broken.lmjsonl").string(), "validate_broken");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("\"error\":\"ParseError\"") != std::string::npos);
    CHECK(r.err.find("\"line\":3") != std::string::npos);
    CHECK(r.err.find("broken.lmjsonl") != std::string::npos);
}

TEST_CASE("compare ranks the fixture summaries") {
    const fs::path dir = fresh("compare");
    const fs::path fx = kData / "fixtures" / "published_modes";
    std::string args = "compare --out-dir " + dir.string();
    for (const char* m : {"landmarks", "left5", "lr10", "avg5"}) {
        args += std::string(" --summary ") + m + "=" + (fx / (std::string(m) + ".txt")).string();
    }
    const Run r = cli(args, "compare");
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "compare.csv") ==
          "rank,mode,mae,obo,n_videos\n1,avg5,0.211000,0.599000,0\n2,lr10,0.213000,0.587000,0\n"
          "3,left5,0.227000,0.571000,0\n4,landmarks,0.236000,0.559000,0\n");
    CHECK(slurp(dir / "compare.txt") == r.out);

    const Run one = cli("compare --summary avg5=" + (fx / "avg5.txt").string() + " --out-dir " + dir.string(),
                        "compare_one");
    CHECK(one.exit_code == 1);
    const Run wrong = cli("compare --summary lr10=" + (fx / "avg5.txt").string() + " --summary landmarks=" +
                              (fx / "landmarks.txt").string() + " --out-dir " + dir.string(),
                          "compare_wrong");
    CHECK(wrong.exit_code == 1);
    CHECK(wrong.err.find("ModeMismatch") != std::string::npos);
}

TEST_CASE("ledger correction through eval") {
    const fs::path dir = fresh("ledger");
    std::ofstream(dir / "ann.csv") << "video_id,count,action\nstu4_5,51,PullUp\nstu1_1,4,Squat\n";
    std::ofstream(dir / "pred.csv") << "video_id,count\nstu4_5,5\nstu1_1,4\n";
    const std::string ledger = (kData / "ledgers" / "repcount_errata.csv").string();
    const Run raw = cli("eval --annotations " + (dir / "ann.csv").string() + " --predictions " +
                            (dir / "pred.csv").string() + " --out-dir " + dir.string(),
                        "ledger_raw");
    REQUIRE(raw.exit_code == 0);
    CHECK(raw.out.find("obo=0.500000 ledger=none") != std::string::npos);
    const Run fixed = cli("eval --annotations " + (dir / "ann.csv").string() + " --predictions " +
                              (dir / "pred.csv").string() + " --ledger " + ledger + " --out-dir " + dir.string(),
                          "ledger_fixed");
    REQUIRE(fixed.exit_code == 0);
    CHECK(fixed.out == "n_videos=2 mae=0.000000 obo=1.000000 ledger=repcount_errata\n");

    std::ofstream(dir / "ann_fixed.csv") << "video_id,count,action\nstu4_5,5,PullUp\n";
    const Run stale = cli("eval --annotations " + (dir / "ann_fixed.csv").string() + " --predictions " +
                              (dir / "pred.csv").string() + " --ledger " + ledger + " --out-dir " + dir.string(),
                          "ledger_stale");
    CHECK(stale.exit_code == 3);
    CHECK(stale.err.find("StaleCorrection") != std::string::npos);
}

TEST_CASE("eval exit codes") {
    const fs::path dir = fresh("eval_codes");
    std::ofstream(dir / "ann.csv") << "video_id,count,action\na,3,squat\nb,4,squat\n";
    std::ofstream(dir / "pred.csv") << "video_id,count\na,3\n";
    const Run missing = cli("eval --annotations " + (dir / "ann.csv").string() + " --predictions " +
                                (dir / "pred.csv").string() + " --out-dir " + dir.string(),
                            "eval_missing");
    CHECK(missing.exit_code == 3);
    CHECK(missing.err.find("\"subject\":\"b\"") != std::string::npos);
    CHECK(!fs::exists(dir / "eval_summary.txt"));

    std::ofstream(dir / "bad.csv") << "video_id,count,action\na,x,squat\n";
    CHECK(cli("eval --annotations " + (dir / "bad.csv").string() + " --predictions " + (dir / "pred.csv").string(),
              "eval_bad")
              .exit_code == 2);
    CHECK(cli("eval --annotations " + (dir / "ann.csv").string(), "eval_usage").exit_code == 1);
}

TEST_CASE("train writes a checkpoint and reruns are byte-identical") {
    const fs::path dir = fresh("train");
    const std::string d = dir.string();
    REQUIRE(cli("synth --template squat --reps 4 --period 16 --noise 0.002 --videos 3 --seed 5 --out-dir " + d +
                    "/clips",
                "train_synth")
                .exit_code == 0);
    const std::string first_clip = slurp(dir / "clips" / "squat_0.lmjsonl");
    REQUIRE(cli("synth --template squat --reps 4 --period 16 --noise 0.002 --videos 3 --seed 5 --out-dir " + d +
                    "/clips2",
                "train_synth2")
                .exit_code == 0);
    CHECK(slurp(dir / "clips2" / "squat_0.lmjsonl") == first_clip);

    const std::string train_args = "train --annotations " + d + "/clips/annotations.csv --landmarks " + d +
                                   "/clips --mode avg5 --epochs 40 --hidden 16 --seed 3 --model ";
    const Run t1 = cli(train_args + d + "/m1.txt", "train_1");
    REQUIRE(t1.exit_code == 0);
    CHECK(t1.out.rfind("trained mode=avg5 examples=27 epochs=40", 0) == 0);
    REQUIRE(cli(train_args + d + "/m2.txt", "train_2").exit_code == 0);
    CHECK(slurp(dir / "m1.txt") == slurp(dir / "m2.txt"));
    CHECK(slurp(dir / "m1.txt").rfind("repcount-scorer v1 mode=avg5 layers=104,16,1 actions=squat seed=3\n", 0) == 0);

    const std::string count_args =
        "count --landmarks " + d + "/clips --annotations " + d + "/clips/annotations.csv --model " + d + "/m1.txt";
    REQUIRE(cli(count_args + " --out-dir " + d + "/c1", "count_1").exit_code == 0);
    REQUIRE(cli(count_args + " --out-dir " + d + "/c2", "count_2").exit_code == 0);
    CHECK(slurp(dir / "c1" / "counts.csv") == slurp(dir / "c2" / "counts.csv"));
    CHECK(slurp(dir / "c1" / "density" / "squat_1.csv") == slurp(dir / "c2" / "density" / "squat_1.csv"));

    const Run mismatch = cli(count_args + " --mode lr10 --out-dir " + d + "/c3", "count_mismatch");
    CHECK(mismatch.exit_code == 1);
    CHECK(mismatch.err.find("ModeMismatch") != std::string::npos);

    // Annotations without salient frames leave nothing to learn from.
    std::ofstream(dir / "plain.csv") << "video_id,count,action\nsquat_0,4,squat\n";
    const Run empty = cli("train --annotations " + d + "/plain.csv --landmarks " + d + "/clips --model " + d +
                              "/m3.txt",
                          "train_empty");
    CHECK(empty.exit_code == 4);
    CHECK(empty.err.find("EmptyDataset") != std::string::npos);
    CHECK(!fs::exists(dir / "m3.txt"));
}

TEST_CASE("unknown subcommand or flags are usage errors") {
    CHECK(cli("frobnicate", "usage_1").exit_code == 1);
    CHECK(cli("count --landmarks x --smooth 4 --action squat", "usage_2").exit_code == 1);
    CHECK(cli("--help", "usage_help").exit_code == 0);
}

TEST_CASE("options can come from a config file") {
    const fs::path dir = fresh("config");
    REQUIRE(cli("synth --reps 2 --period 10 --out-dir " + (dir / "clips").string(), "config_synth").exit_code == 0);
    std::ofstream(dir / "run.toml") << "[count]\nlandmarks = [\"" << (dir / "clips").string()
                                    << "\"]\naction = \"squat\"\nsmooth = 1\nout-dir = \"" << (dir / "out").string()
                                    << "\"\n";
    const Run r = cli("--config " + (dir / "run.toml").string() + " count", "config_count");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "squat count=2\n");
    CHECK(fs::exists(dir / "out" / "counts.csv"));
}
