#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(DLAB_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(is), "missing file: " << path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("dlab_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string write_config(const std::string& dir, const std::string& extra) {
    const std::string path = dir + "/config.txt";
    std::ofstream os(path);
    os << "gen.n_patients=24\n"
          "gen.images_per_patient=2\n"
          "gen.image_size=16\n"
          "gen.dr_prevalence=0.35\n"
          "gen.seed=7\n"
          "split.train=0.6\n"
          "split.val=0.2\n"
          "split.test=0.2\n"
          "train.epochs_max=1\n"
          "train.batch_size=8\n"
          "train.lr=1e-3\n"
          "train.latent_dim=8\n"
          "train.seed=7\n"
          "audit.bootstrap_resamples=50\n";
    os << extra;
    return path;
}

}  // namespace

TEST_CASE("synth: outputs, determinism, feasibility") {
    const auto dir = temp_dir("synth");
    const auto cfg = write_config(dir, "train.mode=baseline\n");

    const auto out1 = dir + "/d1";
    REQUIRE(run("synth --config " + cfg + " --out " + out1) == 0);
    for (const char* f : {"meta.csv", "images.bin", "manifest.json", "timings.json"})
        CHECK(fs::exists(out1 + "/" + f));

    SUBCASE("identical rerun gives identical content") {
        const auto out2 = dir + "/d2";
        REQUIRE(run("synth --config " + cfg + " --out " + out2) == 0);
        CHECK(slurp(out1 + "/meta.csv") == slurp(out2 + "/meta.csv"));
        CHECK(slurp(out1 + "/images.bin") == slurp(out2 + "/images.bin"));
        CHECK(slurp(out1 + "/manifest.json") == slurp(out2 + "/manifest.json"));
    }
    SUBCASE("seed override changes the dataset") {
        const auto out3 = dir + "/d3";
        REQUIRE(run("synth --config " + cfg + " --out " + out3 + " --seed 99") == 0);
        CHECK(slurp(out1 + "/images.bin") != slurp(out3 + "/images.bin"));
    }
    SUBCASE("infeasible confound is a validation error (exit 1)") {
        const auto bad = dir + "/bad.txt";
        std::ofstream os(bad);
        os << "gen.confound_rho=0.99\ngen.dr_prevalence=0.18\n";
        os.close();
        CHECK(run("synth --config " + bad + " --out " + dir + "/dbad") == 1);
    }
    SUBCASE("unknown config key is a validation error (exit 1)") {
        const auto bad = dir + "/unknown.txt";
        std::ofstream os(bad);
        os << "gen.wavelength=42\n";
        os.close();
        CHECK(run("synth --config " + bad + " --out " + dir + "/dbad2") == 1);
    }
    SUBCASE("missing subcommand or option is rejected") {
        CHECK(run("") != 0);
        CHECK(run("synth --config " + cfg) != 0);
    }
}

TEST_CASE("train: artifacts and config validation") {
    const auto dir = temp_dir("train");
    const auto cfg = write_config(dir, "train.mode=baseline\n");
    const auto data = dir + "/data";
    REQUIRE(run("synth --config " + cfg + " --out " + data) == 0);

    const auto out = dir + "/run";
    REQUIRE(run("train --config " + cfg + " --in " + data + " --out " + out) == 0);
    for (const char* f :
         {"model.ckpt", "history.csv", "predictions.csv", "manifest.json", "timings.json"})
        CHECK(fs::exists(out + "/" + f));

    // every test sample got a prediction: 24 patients * 0.2 * 2 images
    const auto preds = slurp(out + "/predictions.csv");
    std::size_t rows = 0;
    for (char c : preds) rows += (c == '\n');
    CHECK(rows == 1 + 10);

    SUBCASE("disentangled config without target_sa fails before compute") {
        const auto cfg2 = write_config(dir, "train.mode=disentangled\n");
        CHECK(run("train --config " + cfg2 + " --in " + data + " --out " + dir + "/r2") ==
              1);
        CHECK_FALSE(fs::exists(dir + "/r2/model.ckpt"));
    }
    SUBCASE("missing dataset directory is a runtime failure") {
        CHECK(run("train --config " + cfg + " --in " + dir + "/nope --out " + dir +
                  "/r3") == 2);
    }
}

TEST_CASE("audit: golden-file match on the frozen fixture") {
    const auto dir = temp_dir("audit");
    const std::string fixtures = FIXTURE_DIR;
    REQUIRE(run("audit --in " + fixtures + "/predictions.csv --out " + dir) == 0);

    std::vector<std::string> golden_files = {"audit.csv"};
    for (const char* sa : {"age", "sex", "education", "insurance", "obesity"}) {
        golden_files.push_back(std::string("dca_") + sa + ".csv");
        golden_files.push_back(std::string("risk_") + sa + "_g0.csv");
        golden_files.push_back(std::string("risk_") + sa + "_g1.csv");
    }
    for (const auto& f : golden_files) {
        INFO("golden file: " << f);
        CHECK(slurp(dir + "/" + f) == slurp(fixtures + "/golden/" + f));
    }

    SUBCASE("SVG outputs are well-formed XML envelopes") {
        for (const char* f : {"dca_age.svg", "risk_sex.svg", "auroc_disparity.svg"}) {
            const auto text = slurp(dir + "/" + std::string(f));
            CHECK(text.rfind("<?xml", 0) == 0);
            CHECK(text.find("</svg>") != std::string::npos);
        }
    }
    SUBCASE("malformed predictions file is a validation error") {
        const auto bad = dir + "/bad.csv";
        std::ofstream os(bad);
        os << "image_id,score\nx,0.5\n";
        os.close();
        CHECK(run("audit --in " + bad + " --out " + dir + "/abad") == 1);
    }
    SUBCASE("empty subgroup: exit 0, NA rows, plot omitted") {
        // every record in group 0 for every SA
        const auto constant = dir + "/const.csv";
        std::ofstream os(constant);
        os << "image_id,patient_id,y_true,score,y_hat,age,sex,education,insurance,"
              "obesity\n";
        for (int i = 0; i < 40; ++i)
            os << "c" << i << "_i0,c" << i << "," << (i % 3 == 0 ? 1 : 0) << ",0."
               << (10 + i) << "," << (i >= 30 ? 1 : 0) << ",0,0,0,0,0\n";
        os.close();
        const auto out = dir + "/const_audit";
        REQUIRE(run("audit --in " + constant + " --out " + out) == 0);
        const auto audit = slurp(out + "/audit.csv");
        CHECK(audit.find("age,g1,0,0,NA") != std::string::npos);
        CHECK(fs::exists(out + "/dca_age.svg"));  // g0 curve still drawn
        const auto risk_csvs = {out + "/risk_age_g0.csv", out + "/risk_age_g1.csv"};
        CHECK(fs::exists(*risk_csvs.begin()));
        CHECK_FALSE(fs::exists(*(risk_csvs.begin() + 1)));
    }
}

TEST_CASE("compare: deltas and error paths") {
    const auto dir = temp_dir("compare");
    const std::string fixtures = FIXTURE_DIR;
    const auto audit_dir = dir + "/a";
    REQUIRE(run("audit --in " + fixtures + "/predictions.csv --out " + audit_dir) == 0);

    SUBCASE("self-comparison yields all-zero deltas") {
        const auto out = dir + "/self";
        REQUIRE(run("compare --in " + audit_dir + " --in2 " + audit_dir + " --out " + out) ==
                0);
        std::ifstream is(out + "/compare.csv");
        std::string line;
        std::getline(is, line);
        CHECK(line == "metric,baseline,disentangled,delta");
        while (std::getline(is, line)) {
            const auto last_comma = line.rfind(',');
            CHECK(line.substr(last_comma + 1) == "0");
        }
        CHECK(fs::exists(out + "/summary.txt"));
    }
    SUBCASE("missing directory gives a clear nonzero exit") {
        CHECK(run("compare --in " + audit_dir + " --in2 " + dir + "/nope --out " + dir +
                  "/c2") != 0);
    }
}

TEST_CASE("all: full pipeline produces the complete artifact tree") {
    const auto dir = temp_dir("all");
    // the leakage probe needs >= 20 test samples per SA class, so this
    // pipeline run uses a larger cohort than the other cases
    const auto cfg = write_config(
        dir, "train.mode=baseline\ntrain.target_sa=age\ngen.n_patients=150\n"
             "train.epochs_max=1\n");
    const auto out = dir + "/pipeline";
    REQUIRE(run("all --config " + cfg + " --out " + out) == 0);
    for (const char* f : {"dataset/meta.csv", "dataset/images.bin",
                          "train_baseline/predictions.csv",
                          "train_disentangled/predictions.csv", "audit_baseline/audit.csv",
                          "audit_disentangled/audit.csv", "compare/compare.csv",
                          "compare/summary.txt", "probes.csv", "manifest.json"})
        CHECK(fs::exists(out + "/" + std::string(f)));
}
