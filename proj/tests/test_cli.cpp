#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "faultscope/commands.hpp"
#include "faultscope/cwt.hpp"
#include "faultscope/dataset.hpp"
#include "json.hpp"
#include "png_decode.hpp"
#include "tmpdir.hpp"

using namespace faultscope;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void write_csv(const std::filesystem::path& p, std::size_t n) {
  std::string text = "amplitude\n";
  for (std::size_t i = 0; i < n; ++i)
    text += std::to_string(std::sin(0.05 * static_cast<double>(i)) + 0.1 * std::sin(1.3 * static_cast<double>(i))) + "\n";
  write_text_file(p, text);
}

std::size_t count_ext(const std::filesystem::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

std::uint32_t cwt_rows(const std::filesystem::path& p) { return static_cast<std::uint32_t>(read_scalogram(p).rows()); }

} // namespace

TEST_CASE("help lists every pipeline flag") {
  const Run top = cli({"--help"});
  CHECK(top.code == 0);
  for (const char* sub : {"transform", "synth", "build", "evaluate", "report"})
    CHECK(top.out.find(sub) != std::string::npos);

  for (const char* sub : {"transform", "build"}) {
    const Run h = cli({sub, "--help"});
    CAPTURE(sub);
    CHECK(h.code == 0);
    for (const char* flag : {"--config", "--window", "--overlap", "--num-scales", "--f-min", "--f-max",
                             "--image-size", "--colormap", "--log-epsilon", "--energy-quantile",
                             "--train-ratio", "--val-ratio", "--test-ratio", "--augment-copies",
                             "--augment-flip", "--max-rotation", "--contrast-min", "--contrast-max",
                             "--min-box-area", "--seed", "FAULTSCOPE_WINDOW"})
      CHECK(h.out.find(flag) != std::string::npos);
    CHECK(h.out.find("2048") != std::string::npos);
    CHECK(h.out.find("640") != std::string::npos);
  }
  const Run e = cli({"evaluate", "--help"});
  CHECK(e.out.find("--iou") != std::string::npos);
  CHECK(e.out.find("0.25") != std::string::npos);
}

TEST_CASE("transform") {
  TempDir dir;
  write_csv(dir / "sig.csv", 4096);

  SUBCASE("defaults produce three 640 by 640 images") {
    const Run r = cli({"transform", (dir / "sig.csv").string(), "--rate", "12000", "-o", (dir / "out").string()});
    REQUIRE(r.code == 0);
    CHECK(count_ext(dir / "out", ".png") == 3);
    for (int i = 0; i < 3; ++i) {
      const auto png = testpng::decode(dir.path() / "out" / ("sig_seg000" + std::to_string(i) + ".png"));
      CHECK(png.width == 640);
      CHECK(png.height == 640);
    }
    CHECK(std::filesystem::exists(dir.path() / "out" / "config.json"));

    const Run again = cli({"-j", "1", "transform", (dir / "sig.csv").string(), "--rate", "12000", "-o",
                           (dir / "out2").string()});
    REQUIRE(again.code == 0);
    for (int i = 0; i < 3; ++i) {
      const std::string name = "sig_seg000" + std::to_string(i) + ".png";
      CHECK(read_file_bytes(dir.path() / "out" / name) == read_file_bytes(dir.path() / "out2" / name));
    }
  }
  SUBCASE("missing input names the path") {
    const Run r = cli({"transform", (dir / "nope.csv").string(), "--rate", "12000", "-o", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("nope.csv") != std::string::npos);
  }
  SUBCASE("usage errors") {
    CHECK(cli({"transform", (dir / "sig.csv").string()}).code == 1);  // no -o
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({}).code == 1);
    CHECK(cli({"transform", (dir / "sig.csv").string(), "-o", (dir / "o").string()}).code == 1);  // no rate
    CHECK(cli({"transform", (dir / "sig.csv").string(), "--rate", "12000", "--overlap", "1.5", "-o",
               (dir / "o").string()}).code == 1);
  }
  SUBCASE("short signal is a data error with provenance") {
    write_csv(dir / "short.csv", 100);
    const Run r = cli({"transform", (dir / "short.csv").string(), "--rate", "12000", "-o", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("short.csv") != std::string::npos);
  }
  SUBCASE("config file, flags and environment") {
    write_text_file(dir / "cfg.json", R"({"num_scales": 16, "image_height": 32, "image_width": 48})");
    const std::string in = (dir / "sig.csv").string();
    REQUIRE(cli({"transform", in, "--rate", "12000", "--config", (dir / "cfg.json").string(),
                 "--dump-scalograms", "-o", (dir / "a").string()}).code == 0);
    CHECK(cwt_rows(dir.path() / "a" / "sig_seg0000.cwt") == 16);
    const auto png = testpng::decode(dir.path() / "a" / "sig_seg0000.png");
    CHECK(png.height == 32);
    CHECK(png.width == 48);

    REQUIRE(cli({"transform", in, "--rate", "12000", "--config", (dir / "cfg.json").string(),
                 "--num-scales", "12", "--dump-scalograms", "-o", (dir / "b").string()}).code == 0);
    CHECK(cwt_rows(dir.path() / "b" / "sig_seg0000.cwt") == 12);
    const auto echoed = nlohmann::json::parse(read_file_bytes(dir.path() / "b" / "config.json"));
    CHECK(echoed.at("num_scales") == 12);
    CHECK(echoed.at("image_width") == 48);

    ::setenv("FAULTSCOPE_NUM_SCALES", "9", 1);
    const Run env = cli({"transform", in, "--rate", "12000", "--config", (dir / "cfg.json").string(),
                         "--dump-scalograms", "-o", (dir / "c").string()});
    ::unsetenv("FAULTSCOPE_NUM_SCALES");
    REQUIRE(env.code == 0);
    CHECK(cwt_rows(dir.path() / "c" / "sig_seg0000.cwt") == 9);

    write_text_file(dir / "broken.json", "{ not json");
    CHECK(cli({"transform", in, "--rate", "12000", "--config", (dir / "broken.json").string(), "-o",
               (dir / "d").string()}).code == 2);
  }
}

TEST_CASE("synth") {
  TempDir dir;
  REQUIRE(cli({"synth", "-n", "4", "--seed", "5", "-o", (dir / "a").string()}).code == 0);
  REQUIRE(cli({"synth", "-n", "4", "--seed", "5", "-o", (dir / "b").string()}).code == 0);
  CHECK(count_ext(dir / "a", ".wav") == 4);
  for (const auto& e : std::filesystem::directory_iterator(dir / "a"))
    CHECK(read_file_bytes(e.path()) == read_file_bytes(dir.path() / "b" / e.path().filename()));
  const auto signals = load_signal_set(dir / "a");
  REQUIRE(signals.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(signals[i].signal.label == kAllClasses[i]);

  REQUIRE(cli({"synth", "-n", "4", "--seed", "6", "-o", (dir / "c").string()}).code == 0);
  CHECK(read_file_bytes(dir / "a/signals.json") != read_file_bytes(dir / "c/signals.json"));

  const Run zero = cli({"synth", "-n", "0", "-o", (dir / "z").string()});
  CHECK(zero.code != 0);
  CHECK_FALSE(zero.err.empty());

  write_text_file(dir / "spec.json", R"({"Ball": {"fault_hz": 90.0}})");
  CHECK(cli({"synth", "-n", "2", "--spec", (dir / "spec.json").string(), "-o", (dir / "s").string()}).code == 0);
  write_text_file(dir / "bad.json", R"({"Cage": {"fault_hz": 90.0}})");
  CHECK(cli({"synth", "-n", "2", "--spec", (dir / "bad.json").string(), "-o", (dir / "t").string()}).code == 2);
}

TEST_CASE("build, evaluate and report") {
  TempDir dir;
  REQUIRE(cli({"synth", "-n", "4", "--duration", "0.4", "-o", (dir / "sig").string()}).code == 0);
  const Run b = cli({"build", "--signals", (dir / "sig").string(), "--image-size", "64", "--num-scales", "16",
                     "--augment-copies", "0", "-o", (dir / "ds").string()});
  REQUIRE(b.code == 0);
  // 4800 samples -> 3 windows per signal, 12 items -> 10/1/1
  CHECK(b.out.find("train 10, val 1, test 1") != std::string::npos);
  CHECK(std::filesystem::exists(dir.path() / "ds" / "config.json"));

  // ground truth copied as predictions
  const auto manifest = load_manifest(dir / "ds/manifest.json");
  std::filesystem::create_directories(dir / "preds");
  for (const auto& e : manifest.entries) {
    std::vector<Detection> d;
    for (const auto& a : parse_labels(dir.path() / "ds" / e.label)) d.push_back({a, 1.0});
    write_predictions(d, dir.path() / "preds" / (std::filesystem::path(e.image).stem().string() + ".txt"));
  }
  const Run ev = cli({"evaluate", "--dataset", (dir / "ds").string(), "--predictions", (dir / "preds").string(),
                      "--split", "train", "-o", (dir / "eval").string()});
  REQUIRE(ev.code == 0);
  const auto report = nlohmann::json::parse(read_file_bytes(dir / "eval/report.json"));
  CHECK(report.at("map50") == 1.0);
  CHECK(std::filesystem::exists(dir / "eval/report.txt"));

  const Run rep = cli({"report", "--eval", (dir / "eval/report.json").string(), "--dataset", "CWRU", "--model",
                       "YOLOv11", "-o", (dir / "cmp.json").string()});
  CHECK(rep.code == 0);
  CHECK(rep.out.find("+0.0100") != std::string::npos);
  const Run unknown = cli({"report", "--eval", (dir / "eval/report.json").string(), "--dataset", "XJTU",
                           "--model", "YOLOv9"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("CWRU") != std::string::npos);

  std::filesystem::remove(dir / "preds" / (std::filesystem::path(manifest.entries[0].image).stem().string() + ".txt"));
  const Run missing = cli({"evaluate", "--dataset", (dir / "ds").string(), "--predictions",
                           (dir / "preds").string(), "--split", std::string(split_name(manifest.entries[0].split))});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("missing prediction file") != std::string::npos);
  CHECK(cli({"evaluate", "--dataset", (dir / "ds").string(), "--predictions", (dir / "preds").string(),
             "--split", "holdout"}).code == 1);
}
