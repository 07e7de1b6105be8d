// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "errors.hpp"
#include "image.hpp"
#include "test_support.hpp"

using namespace augloop;

TEST_CASE("geometry is validated") {
  CHECK_THROWS_AS(ImageBuffer(0, 4, 1), Error);
  CHECK_THROWS_AS(ImageBuffer(4, 4, 2), Error);
  CHECK_THROWS_AS(ImageBuffer(2, 2, 1, std::vector<std::uint8_t>(3)), Error);
  ImageBuffer img(3, 2, 3);
  CHECK(img.pixels().size() == 18);
}

TEST_CASE("png round trip is bit exact") {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 20; ++i) {
    const ImageBuffer img = testing::random_image(gen);
    const auto bytes = encode_png(img);
    CHECK(decode_png(bytes) == img);
    CHECK(decode_image(bytes) == img);
    // Deterministic encoding.
    CHECK(encode_png(img) == bytes);
  }
}

TEST_CASE("files round trip") {
  const auto dir = testing::scratch_dir("image");
  std::mt19937_64 gen(3);
  const ImageBuffer img = testing::random_image(gen, 17, 9, 3);
  save_png(img, dir / "a.png");
  CHECK(load_image(dir / "a.png") == img);
}

TEST_CASE("garbage does not decode") {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  try {
    decode_image(junk);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kImageUndecodable);
  }
  std::vector<std::uint8_t> torn = encode_png(ImageBuffer(8, 8, 1));
  torn.resize(torn.size() / 2);
  CHECK_THROWS_AS(decode_image(torn), Error);
}

TEST_CASE("content hash covers geometry and pixels") {
  ImageBuffer a(4, 2, 1);
  ImageBuffer b(2, 4, 1);
  CHECK(content_hash(a).size() == 64);
  CHECK(content_hash(a) == content_hash(ImageBuffer(4, 2, 1)));
  CHECK(content_hash(a) != content_hash(b));
  a.at(1, 1) = 9;
  CHECK(content_hash(a) != content_hash(ImageBuffer(4, 2, 1)));
}

TEST_CASE("base64 known vectors") {
  auto enc = [](std::string s) { return base64_encode(std::vector<std::uint8_t>(s.begin(), s.end())); };
  CHECK(enc("") == "");
  CHECK(enc("f") == "Zg==");
  CHECK(enc("fo") == "Zm8=");
  CHECK(enc("foobar") == "Zm9vYmFy");
  const auto dec = base64_decode("Zm9vYmE=");
  CHECK(std::string(dec.begin(), dec.end()) == "fooba");
  CHECK_THROWS_AS(base64_decode("Zm9v!mE="), Error);
}

TEST_CASE("grayscale conversion") {
  ImageBuffer rgb(1, 1, 3, {255, 255, 255});
  const ImageBuffer g = to_grayscale(rgb);
  CHECK(g.channels() == 1);
  CHECK(g.at(0, 0) == 255);
  ImageBuffer black(1, 1, 3);
  CHECK(to_grayscale(black).at(0, 0) == 0);
}
