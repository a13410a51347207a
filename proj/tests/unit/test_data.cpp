#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "feie/data/io.hpp"
#include "feie/data/split.hpp"
#include "feie/data/synthetic.hpp"
#include "feie/error.hpp"
#include "support.hpp"

using namespace feie;
using namespace feie::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("feie_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("frame generator") {
  FrameRecipe recipe;
  recipe.input_dim = 16;

  SUBCASE("same seed, same records") {
    const auto a = gen_frame_dataset(5, 50, recipe);
    const auto b = gen_frame_dataset(5, 50, recipe);
    CHECK(a.samples == b.samples);
    CHECK(a.manifest == b.manifest);
    CHECK(gen_frame_dataset(6, 50, recipe).samples != a.samples);
  }
  SUBCASE("partial-annotation mix") {
    recipe.mix = {0.4, 0.3, 0.3, 0.0};
    const auto ds = gen_frame_dataset(1, 1000, recipe);
    std::size_t va = 0, expr = 0, au = 0;
    for (const auto& s : ds.samples) {
      CHECK(int(s.va.has_value()) + int(s.expr.has_value()) + int(s.au.has_value()) == 1);
      va += s.va.has_value();
      expr += s.expr.has_value();
      au += s.au.has_value();
    }
    CHECK(va >= 399);
    CHECK(va <= 401);
    CHECK(expr >= 299);
    CHECK(expr <= 301);
    CHECK(au >= 299);
    CHECK(au <= 301);
  }
  SUBCASE("noise-free action units follow the expression") {
    recipe.feature_noise = 0.0;
    recipe.au_flip = 0.0;
    for (const auto& s : gen_frame_dataset(2, 300, recipe).samples) {
      std::vector<double> onehot(7, 0.0);
      onehot[static_cast<std::size_t>(*s.expr)] = 1.0;
      const auto pseudo = test::oracle_pseudo_au(onehot);
      for (std::size_t a = 0; a < kNumActionUnits; ++a) {
        CHECK((*s.au)[a] == (pseudo[a] >= 0.5 ? 1 : 0));
      }
    }
  }
  SUBCASE("every sample is valid") {
    for (const auto& s : gen_frame_dataset(3, 100, recipe).samples) CHECK_NOTHROW(validate(s));
  }
}

TEST_CASE("video generator") {
  VideoRecipe recipe;

  SUBCASE("same seed, same dataset") {
    CHECK(gen_video_dataset(9, 20, recipe).samples == gen_video_dataset(9, 20, recipe).samples);
  }
  SUBCASE("fixed full length means no padding") {
    recipe.min_length = recipe.max_length = recipe.steps;
    for (const auto& v : gen_video_dataset(1, 20, recipe).samples) CHECK(v.length == recipe.steps);
  }
  SUBCASE("lengths stay in range and padded rows are zero") {
    for (const auto& v : gen_video_dataset(2, 50, recipe).samples) {
      CHECK(v.length >= recipe.min_length);
      CHECK(v.length <= recipe.max_length);
      CHECK_NOTHROW(validate(v));
    }
  }
  SUBCASE("labels ignore padded rows") {
    recipe.padding = Padding::kNoise;
    std::mt19937_64 rng(4);
    for (const auto& v : gen_video_dataset(3, 30, recipe).samples) {
      CHECK(intensity_labels(v.frames, v.length, recipe) == v.label);
      Tensor corrupted = v.frames;
      for (std::size_t r = v.length; r < v.steps(); ++r) {
        for (std::size_t c = 0; c < v.dim(); ++c) corrupted.at(r, c) = double(rng() % 100) - 50.0;
      }
      CHECK(intensity_labels(corrupted, v.length, recipe) == v.label);
    }
  }
  SUBCASE("labels lie in [0, 1]") {
    for (const auto& v : gen_video_dataset(4, 50, recipe).samples) {
      for (double y : v.label) {
        CHECK(y >= 0.0);
        CHECK(y <= 1.0);
      }
    }
  }
  SUBCASE("invalid length range") {
    recipe.max_length = recipe.steps + 1;
    CHECK_THROWS_AS(gen_video_dataset(1, 2, recipe), ValidationError);
  }
  SUBCASE("raw features use the frame projection width") {
    recipe.raw_features = true;
    recipe.frame.input_dim = 12;
    CHECK(gen_video_dataset(1, 2, recipe).samples[0].dim() == 12);
  }
}

TEST_CASE("pad_sequence") {
  const std::vector<std::vector<double>> frames = {{1, 2}, {3, 4}, {5, 6}};
  const auto p = pad_sequence(frames, 5);
  CHECK(p.length == 3);
  CHECK(p.frames.data() == std::vector<double>{1, 2, 3, 4, 5, 6, 0, 0, 0, 0});
  CHECK(pad_sequence(frames, 3).frames.data() == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS(pad_sequence({}, 5), ValidationError);
  CHECK_THROWS_AS(pad_sequence(frames, 2), ValidationError);
}

TEST_CASE("split") {
  const std::vector<double> fractions = {0.63, 0.19, 0.18};
  CHECK(allocate_counts(1000, fractions) == std::vector<std::size_t>{630, 190, 180});
  CHECK(allocate_counts(10, std::vector<double>{0.5, 0.25, 0.25}) ==
        std::vector<std::size_t>{5, 3, 2});

  const auto a = split_indices(1000, fractions, 7);
  CHECK(a == split_indices(1000, fractions, 7));
  std::set<std::size_t> all;
  for (const auto& part : a) all.insert(part.begin(), part.end());
  CHECK(all.size() == 1000);
  CHECK(*all.rbegin() == 999);
  CHECK_THROWS_AS(allocate_counts(10, std::vector<double>{0.5, 0.4}), ValidationError);
}

TEST_CASE("record I/O") {
  const fs::path dir = scratch("io");

  SUBCASE("frames round-trip") {
    FrameRecipe recipe;
    recipe.input_dim = 8;
    recipe.mix = {0.25, 0.25, 0.25, 0.25};
    const auto samples = gen_frame_dataset(11, 100, recipe).samples;
    write_frames(dir / "f.jsonl", samples);
    CHECK(read_frames(dir / "f.jsonl") == samples);
  }
  SUBCASE("videos round-trip") {
    VideoRecipe recipe;
    recipe.padding = Padding::kNoise;
    const auto samples = gen_video_dataset(12, 100, recipe).samples;
    write_videos(dir / "v.jsonl", samples);
    CHECK(read_videos(dir / "v.jsonl") == samples);
    write_videos(dir / "w.jsonl", read_videos(dir / "v.jsonl"));
    CHECK(slurp(dir / "v.jsonl") == slurp(dir / "w.jsonl"));
  }
  SUBCASE("manifest round-trip") {
    const auto m = gen_video_dataset(1, 3, VideoRecipe{}).manifest;
    write_manifest(dir / "manifest.json", m);
    CHECK(read_manifest(dir / "manifest.json") == m);
  }
  SUBCASE("expression off the simplex is rejected") {
    FrameSample s;
    s.id = "x";
    s.features = {0.1, 0.2};
    s.expr = 3;
    auto j = frame_record(s);
    j["labels"]["expr"] = {0.2, 0.2, 0.2, 0.2, 0.0, 0.0, 0.0};
    try {
      parse_frame_record(j);
      FAIL("accepted an expression summing to 0.8");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("expr") != std::string::npos);
    }
  }
  SUBCASE("length beyond the padded size is rejected") {
    auto v = gen_video_dataset(1, 1, VideoRecipe{}).samples[0];
    auto j = video_record(v);
    j["length"] = v.steps() + 1;
    try {
      parse_video_record(j);
      FAIL("accepted l > t");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("length") != std::string::npos);
    }
  }
  SUBCASE("malformed line reports its number") {
    FrameRecipe recipe;
    recipe.input_dim = 4;
    write_frames(dir / "bad.jsonl", gen_frame_dataset(1, 2, recipe).samples);
    std::ofstream(dir / "bad.jsonl", std::ios::app) << "{not json\n";
    try {
      read_frames(dir / "bad.jsonl");
      FAIL("accepted a malformed line");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_videos(dir / "absent.jsonl"), IoError);
  }
  fs::remove_all(dir);
}

TEST_CASE("derive_seed") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 10; ++s) {
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(s, i));
  }
  CHECK(seen.size() == 1000);
}
