#include "doctest.h"

#include <array>
#include <cmath>

#include "syncforge/errors.hpp"
#include "syncforge/image.hpp"
#include "syncforge/jpeg.hpp"
#include "syncforge/png_io.hpp"
#include "test_util.hpp"

using namespace syncforge;

TEST_CASE("luma of gray pixels is exact") {
  for (double v : {0.0, 0.1, 0.5, 0.77, 1.0}) CHECK(luma(v, v, v) == v);
  Image gray(3, 4, 4, 0.3);
  CHECK(to_luma(gray) == Image(1, 4, 4, 0.3));
}

TEST_CASE("luma/chroma round trip") {
  Rng rng(3);
  const Image img = testutil::random_image(rng, 3, 9, 7);
  const auto [y, c] = rgb_to_luma_chroma(img);
  CHECK(y.channels() == 1);
  CHECK(c.channels() == 2);
  CHECK(testutil::max_abs_diff(luma_chroma_to_rgb(y, c), img) < 1e-12);
}

TEST_CASE("bilinear resize of a 2x2 checkerboard") {
  Image img(1, 2, 2);
  img.at(0, 0, 1) = 1.0;
  img.at(0, 1, 0) = 1.0;
  const Image out = resize_bilinear(img, 4, 4);
  const double expected[16] = {0, .25, .75, 1, .25, .375, .625, .75,
                               .75, .625, .375, .25, 1, .75, .25, 0};
  for (int i = 0; i < 16; ++i) CHECK(out.data()[i] == doctest::Approx(expected[i]).epsilon(1e-15));
}

TEST_CASE("bilinear resize matches the reference on a non-integer ratio") {
  const double expected[] = {
    0.5, 0.64724975708290078, 0.79668502263802143, 0.89417989199538406, 0.85925407389835939,
    0.75473153811789784, 0.63399526006236206, 0.74088954635429827, 0.78835666831874163,
    0.80415855829626048, 0.75466242955672636, 0.61961507236665281, 0.47134590746204907,
    0.34567894475728322, 0.81821475212751782, 0.75275632381746949, 0.64356595777845738,
    0.49332459576226817, 0.34532576725970315, 0.2404361558194581, 0.17951604910049934,
    0.70620054872858562, 0.55231550507950855, 0.36843808792388011, 0.19727900187682867,
    0.12781592694649363, 0.13897220040432195, 0.19089420497760512};
  const Image out = resize_bilinear(testutil::probe(1, 3, 5), 4, 7);
  REQUIRE(out.size() == 28);
  for (int i = 0; i < 28; ++i) CHECK(std::abs(out.data()[i] - expected[i]) < 1e-12);
}

TEST_CASE("resize to the same size is the identity") {
  Rng rng(1);
  const Image img = testutil::random_image(rng, 3, 5, 6);
  CHECK(resize_bilinear(img, 5, 6) == img);
  CHECK_THROWS_AS(resize_bilinear(img, 0, 6), InvalidInput);
}

TEST_CASE("psnr") {
  Image a(3, 8, 8, 0.2);
  CHECK(psnr(a, a) == 99.0);
  Image b(3, 8, 8, 0.3);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK_THROWS_AS(psnr(a, Image(3, 8, 9)), InvalidInput);
}

TEST_CASE("ssim matches the windowed reference") {
  const Image a = testutil::probe(3, 16, 16);
  const Image b = testutil::probe(3, 16, 16, 0.5, 1.1, 1.7);
  CHECK(std::abs(ssim(a, b) - (-0.72271450453471564)) < 1e-12);
  // Smaller than the 11x11 window along one axis.
  CHECK(std::abs(ssim(testutil::probe(3, 9, 12), testutil::probe(3, 9, 12, 0.9)) - (0.44220236061539708)) <
        1e-12);
}

TEST_CASE("ssim identity and symmetry") {
  Rng rng(8);
  for (int t = 0; t < 5; ++t) {
    const Image a = testutil::random_image(rng, 3, 20, 17);
    const Image b = testutil::random_image(rng, 3, 20, 17);
    CHECK(ssim(a, a) == 1.0);
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("jpeg quantization tables") {
  const auto q50 = jpeg_quant_table(50, false);
  CHECK(q50[0] == 16);
  CHECK(q50[63] == 99);
  CHECK(jpeg_quant_table(50, true)[0] == 17);
  const std::array<int, 8> q10 = {80, 55, 50, 80, 120, 200, 255, 255};
  const std::array<int, 8> q90 = {3, 2, 2, 3, 5, 8, 10, 12};
  for (int i = 0; i < 8; ++i) {
    CHECK(jpeg_quant_table(10, false)[i] == q10[i]);
    CHECK(jpeg_quant_table(90, false)[i] == q90[i]);
  }
  for (int v : jpeg_quant_table(100, false)) CHECK(v == 1);
  CHECK_THROWS_AS(jpeg_quant_table(0, false), InvalidInput);
  CHECK_THROWS_AS(jpeg_quant_table(101, false), InvalidInput);
}

TEST_CASE("jpeg round trip of one gray block matches the DCT reference") {
  const double expected[] = {
    0.50740750709946214, 0.72090031481415939, 0.91226985019188456, 0.86445954341602826,
    0.59811878739222879, 0.3194855668552134, 0.18442220708543156, 0.16709210103896985,
    0.91342383080270462, 0.85173566119509181, 0.68347276620177344, 0.42011807591694994,
    0.18398782761542432, 0.11550397188288056, 0.22283005402435996, 0.35601271896902698,
    0.67760960195744147, 0.4591062633215241, 0.18605961508575694, 0.056525175806881094,
    0.15914061925748341, 0.43100111051007023, 0.72561261689970447, 0.90850420879524973,
    0.20323080637784824, 0.14774244432955225, 0.17840048921823176, 0.38833599079500031,
    0.68139985779467027, 0.86191111843231849, 0.85095700272236063, 0.76604439973494398,
    0.14353696628350543, 0.33408963113737322, 0.63302705837634599, 0.89219342332863638,
    0.95910506164433695, 0.77775280853325279, 0.45370283162914754, 0.20373687841964097,
    0.61345430365249065, 0.75114719756622872, 0.85368473789456634, 0.76801567444849539,
    0.52390468911507027, 0.28756251646531716, 0.177016102272885, 0.16403588698294114,
    0.93390776837655187, 0.83626037562552147, 0.61956300727574665, 0.32980253576960894,
    0.11494490640454942, 0.11494425689636623, 0.30802915864691266, 0.50014158789383667,
    0.53906775154791098, 0.36899053370512414, 0.17043236139233672, 0.10797198436385608,
    0.24300503993013303, 0.50613060001325783, 0.76802047568165688, 0.92352919495047547};
  const Image out = jpeg_roundtrip(testutil::probe(1, 8, 8), 50);
  for (int i = 0; i < 64; ++i) CHECK(std::abs(out.data()[i] - expected[i]) < 1e-9);
}

TEST_CASE("jpeg keeps constant images and image size") {
  const Image flat(3, 13, 10, 128.0 / 255.0);
  const Image out = jpeg_roundtrip(flat, 40);
  CHECK(out.same_shape(flat));
  CHECK(testutil::max_abs_diff(out, flat) < 1e-9);
}

TEST_CASE("jpeg quality ordering on textured content") {
  const Image img = testutil::probe(3, 32, 32);
  const double p40 = psnr(img, jpeg_roundtrip(img, 40));
  const double p80 = psnr(img, jpeg_roundtrip(img, 80));
  CHECK(p80 > p40);
  CHECK(psnr(img, jpeg_roundtrip(img, 100)) > p80);
}

TEST_CASE("png round trip equals 8-bit quantization") {
  Rng rng(5);
  const Image img = testutil::random_image(rng, 3, 6, 11);
  const auto dir = testutil::temp_dir("png");
  write_png(dir / "a.png", img);
  CHECK(read_png(dir / "a.png") == quantize8(img));
  // Gray images come back as RGB.
  const Image gray = quantize8(testutil::random_image(rng, 1, 4, 4));
  write_png(dir / "g.png", gray);
  const Image back = read_png(dir / "g.png");
  CHECK(back.channels() == 3);
  CHECK(to_luma(back) == gray);
  CHECK(list_pngs(dir).size() == 2);
  CHECK_THROWS_AS(read_png(dir / "missing.png"), IoError);
}
