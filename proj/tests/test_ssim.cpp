#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "artic/ssim.hpp"
#include "helpers.hpp"

using namespace artic;
using namespace artic::testing;

namespace {

Image random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0, 1);
  Image im = Image::zeros(w, h);
  for (Eigen::Index i = 0; i < im.r.size(); ++i) {
    im.r[i] = u(rng);
    im.g[i] = u(rng);
    im.b[i] = u(rng);
  }
  return im;
}

}  // namespace

TEST_CASE("ssim of an image with itself is exactly 1") {
  std::mt19937_64 rng(5);
  const Image im = random_image(rng, 20, 16);
  CHECK(ssim(im, im) == 1.0);
}

TEST_CASE("ssim of black vs white hits the stabilizer floor") {
  Image black = Image::zeros(16, 16);
  Image white = Image::zeros(16, 16);
  white.r.setOnes();
  white.g.setOnes();
  white.b.setOnes();
  // closed form for constant images: (2*0*1+C1)(2*0+C2) / ((0+1+C1)(0+0+C2))
  const double c1 = 1e-4;
  const double expect = c1 / (1.0 + c1);
  CHECK(ssim(black, white) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(ssim(black, white) < 0.01);
}

TEST_CASE("ssim is continuous under tiny noise") {
  std::mt19937_64 rng(9);
  const Image im = random_image(rng, 24, 24);
  Image noisy = im;
  std::normal_distribution<double> n(0, 1e-4);
  for (Eigen::Index i = 0; i < noisy.r.size(); ++i) {
    noisy.r[i] += n(rng);
    noisy.g[i] += n(rng);
    noisy.b[i] += n(rng);
  }
  CHECK(ssim(im, noisy) > 0.999);
}

TEST_CASE("ssim rejects mismatched or tiny images") {
  Image a = Image::zeros(16, 16), b = Image::zeros(16, 15);
  CHECK_THROWS_AS(ssim(a, b), DimensionError);
  Image tiny = Image::zeros(8, 8);
  CHECK_THROWS_AS(ssim(tiny, tiny), DimensionError);
}

TEST_CASE("ssim_channel gradient matches central finite differences") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0, 1);
  const int w = 15, h = 13;
  Eigen::ArrayXd a(w * h), b(w * h);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
  }

  Eigen::ArrayXd grad = Eigen::ArrayXd::Zero(w * h);
  detail::ssim_channel(a, b, w, h, 1.0, &grad);

  const double step = 1e-6;
  std::uniform_int_distribution<Eigen::Index> pick(0, a.size() - 1);
  for (int probe = 0; probe < 40; ++probe) {
    const Eigen::Index i = pick(rng);
    Eigen::ArrayXd ap = a, am = a;
    ap[i] += step;
    am[i] -= step;
    const double fd = (detail::ssim_channel(ap, b, w, h) -
                       detail::ssim_channel(am, b, w, h)) /
                      (2.0 * step);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-4));
  }
}
