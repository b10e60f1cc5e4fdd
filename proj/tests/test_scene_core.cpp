// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "xvgs/camera.hpp"
#include "xvgs/checkpoint.hpp"
#include "xvgs/gaussian.hpp"
#include "xvgs/image.hpp"
#include "xvgs/math.hpp"
#include "xvgs/voxel.hpp"

namespace xvgs {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "xvgs_scene_core_test";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

TEST(MathBasics, SigmoidLogitRoundTrip) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(logit(sigmoid(1.7)), 1.7, 1e-12);
  EXPECT_NEAR(sigmoid(logit(0.1)), 0.1, 1e-12);
  EXPECT_THROW(logit(0.0), std::invalid_argument);
  EXPECT_THROW(logit(1.0), std::invalid_argument);
}

TEST(MathBasics, RngIsDeterministicAndBounded) {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const int64_t v = c.uniform_int(5);
    EXPECT_GE(v, 0);
    EXPECT_LT(v, 5);
  }
  EXPECT_THROW(c.uniform_int(0), std::invalid_argument);
}

TEST(MathBasics, RotationMatrixIdentity) {
  const Mat3 r = rotation_matrix(Quat{});
  EXPECT_LT((r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

// Finite differences over the ambient four components, including non-unit
// quaternions, since the analytic formulas must hold without renormalization.
TEST(MathBasics, RotationMatrixJacobianMatchesFiniteDifferences) {
  Rng rng(99);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    Quat q{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
           rng.uniform(-1.5, 1.5)};
    const auto jac = rotation_matrix_jacobian(q);
    double* comp[4] = {&q.w, &q.x, &q.y, &q.z};
    for (int c = 0; c < 4; ++c) {
      const double saved = *comp[c];
      *comp[c] = saved + h;
      const Mat3 plus = rotation_matrix(q);
      *comp[c] = saved - h;
      const Mat3 minus = rotation_matrix(q);
      *comp[c] = saved;
      const Mat3 fd = (plus - minus) / (2.0 * h);
      EXPECT_LT((fd - jac[c]).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Covariance, IdentityGaussianGivesIdentity) {
  Gaussian3D g;
  EXPECT_LT((covariance_of(g) - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Covariance, AxisScaleGivesDiagonal) {
  Gaussian3D g;
  g.log_scale = Vec3(std::log(2.0), 0.0, 0.0);
  Mat3 expected = Mat3::Identity();
  expected(0, 0) = 4.0;
  EXPECT_LT((covariance_of(g) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Covariance, QuarterTurnAboutZSwapsAxes) {
  Gaussian3D g;
  g.log_scale = Vec3(std::log(2.0), 0.0, 0.0);
  const double s = std::sqrt(0.5);
  g.rotation = Quat{s, 0.0, 0.0, s};
  Mat3 expected = Mat3::Identity();
  expected(1, 1) = 4.0;
  EXPECT_LT((covariance_of(g) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Covariance, RandomGaussiansAreSymmetricPositiveDefinite) {
  Rng rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    Gaussian3D g;
    g.log_scale = Vec3(rng.uniform(-3.0, 1.0), rng.uniform(-3.0, 1.0), rng.uniform(-3.0, 1.0));
    g.rotation = Quat{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized();
    const Mat3 cov = covariance_of(g);
    EXPECT_LT((cov - cov.transpose()).cwiseAbs().maxCoeff(), 1e-12);

    Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    Vec3 expected = (2.0 * g.log_scale).array().exp();
    std::sort(expected.data(), expected.data() + 3);
    EXPECT_GT(solver.eigenvalues().minCoeff(), 0.0);
    EXPECT_LT((solver.eigenvalues() - expected).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Voxel, KeyUsesFloorSemantics) {
  const VoxelKey k = voxel_key(Vec3(0.12, -0.07, 2.35), 0.1);
  EXPECT_EQ(k, (VoxelKey{1, -1, 23}));
  // A point exactly on a cell face lands in the higher cell.
  EXPECT_EQ(voxel_key(Vec3(0.1, 0.1, 0.1), 0.1), (VoxelKey{1, 1, 1}));
  EXPECT_EQ(voxel_key(Vec3(-0.05, 0.0, 0.0), 0.1), (VoxelKey{-1, 0, 0}));
}

TEST(Voxel, KeyRejectsBadInput) {
  EXPECT_THROW(voxel_key(Vec3(0, 0, 0), 0.0), std::invalid_argument);
  EXPECT_THROW(voxel_key(Vec3(0, 0, 0), -1.0), std::invalid_argument);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(voxel_key(Vec3(nan, 0, 0), 0.1), std::invalid_argument);
}

TEST(Voxel, CenterRoundTripsThroughKey) {
  EXPECT_LT((voxel_center(VoxelKey{1, 1, 1}, 0.1) - Vec3(0.15, 0.15, 0.15)).cwiseAbs().maxCoeff(),
            1e-15);
  Rng rng(31);
  const double sizes[] = {0.01, 0.05, 0.1, 1.0, 3.0};
  for (double eps : sizes) {
    for (int i = 0; i < 100; ++i) {
      const VoxelKey k{rng.uniform_int(2001) - 1000, rng.uniform_int(2001) - 1000,
                       rng.uniform_int(2001) - 1000};
      EXPECT_EQ(voxel_key(voxel_center(k, eps), eps), k);
    }
  }
}

TEST(Voxel, GridDeduplicatesCells) {
  GaussianModel m;
  m.voxel_size = 0.1;
  for (const Vec3& p : {Vec3(0.01, 0.01, 0.01), Vec3(0.02, 0.02, 0.02), Vec3(0.11, 0.0, 0.0)}) {
    Gaussian3D g;
    g.position = p;
    m.gaussians.push_back(g);
  }
  const VoxelGrid grid = voxel_grid_of(m);
  EXPECT_EQ(grid.size(), 2u);
  EXPECT_TRUE(grid.contains(VoxelKey{0, 0, 0}));
  EXPECT_TRUE(grid.contains(VoxelKey{1, 0, 0}));
  EXPECT_FALSE(grid.contains(VoxelKey{2, 0, 0}));
}

TEST(Voxel, CoarserGridsNeverHaveMoreCells) {
  Rng rng(77);
  GaussianModel m;
  for (int i = 0; i < 300; ++i) {
    Gaussian3D g;
    g.position = Vec3(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    m.gaussians.push_back(g);
  }
  size_t prev = SIZE_MAX;
  for (double eps : {0.1, 0.2, 0.4, 0.8}) {
    m.voxel_size = eps;
    const size_t n = voxel_grid_of(m).size();
    EXPECT_LE(n, prev);
    prev = n;
  }
}

GaussianModel random_model_f32(size_t n, uint64_t seed) {
  Rng rng(seed);
  // Snap every parameter to its nearest f32 so the disk narrowing is lossless
  // and round trips can be compared bit for bit.
  const auto f = [&](double lo, double hi) {
    return static_cast<double>(static_cast<float>(rng.uniform(lo, hi)));
  };
  GaussianModel m;
  m.voxel_size = 0.25;
  for (size_t i = 0; i < n; ++i) {
    Gaussian3D g;
    g.position = Vec3(f(-5, 5), f(-5, 5), f(-5, 5));
    g.log_scale = Vec3(f(-4, 1), f(-4, 1), f(-4, 1));
    g.rotation = Quat{f(-1, 1), f(-1, 1), f(-1, 1), f(-1, 1)};
    g.opacity_logit = f(-6, 6);
    g.color = Vec3(f(0, 1), f(0, 1), f(0, 1));
    m.gaussians.push_back(g);
  }
  return m;
}

TEST(Checkpoint, EmptyModelRoundTrips) {
  GaussianModel m;
  m.voxel_size = 0.25;
  std::stringstream buf;
  serialize_model(buf, m);
  EXPECT_EQ(buf.str().size(), 4u + 4u + 8u + 4u);
  const GaussianModel back = deserialize_model(buf);
  EXPECT_EQ(back.size(), 0u);
  EXPECT_EQ(back.voxel_size, 0.25);
}

TEST(Checkpoint, RandomModelRoundTripsBitExact) {
  const GaussianModel m = random_model_f32(500, 2024);
  std::stringstream buf;
  serialize_model(buf, m);
  EXPECT_EQ(buf.str().size(), 20u + 56u * m.size());
  const GaussianModel back = deserialize_model(buf);
  ASSERT_EQ(back.size(), m.size());
  EXPECT_EQ(back.voxel_size, m.voxel_size);
  for (size_t i = 0; i < m.size(); ++i) EXPECT_TRUE(back.gaussians[i] == m.gaussians[i]);
}

TEST(Checkpoint, SerializationIsByteDeterministic) {
  const GaussianModel m = random_model_f32(64, 5);
  std::stringstream a, b;
  serialize_model(a, m);
  serialize_model(b, m);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Checkpoint, RejectsBadMagic) {
  std::stringstream buf;
  serialize_model(buf, random_model_f32(3, 1));
  std::string bytes = buf.str();
  bytes[0] = 'Y';
  std::stringstream bad(bytes);
  try {
    deserialize_model(bad);
    FAIL() << "expected bad magic rejection";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
}

TEST(Checkpoint, RejectsUnsupportedVersion) {
  std::stringstream buf;
  serialize_model(buf, random_model_f32(3, 1));
  std::string bytes = buf.str();
  bytes[4] = 9;  // version field, little-endian low byte
  std::stringstream bad(bytes);
  try {
    deserialize_model(bad);
    FAIL() << "expected version rejection";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported version"), std::string::npos);
  }
}

TEST(Checkpoint, RejectsTruncation) {
  std::stringstream buf;
  serialize_model(buf, random_model_f32(3, 1));
  const std::string bytes = buf.str();
  // Cut inside the header and inside the primitive payload.
  for (size_t cut : {size_t(2), size_t(10), size_t(19), bytes.size() - 3}) {
    std::stringstream bad(bytes.substr(0, cut));
    try {
      deserialize_model(bad);
      FAIL() << "expected truncation rejection at " << cut;
    } catch (const std::runtime_error& e) {
      EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    }
  }
}

TEST(Checkpoint, FileRoundTripAndMissingFile) {
  const fs::path path = temp_dir() / "model.xvgs";
  const GaussianModel m = random_model_f32(10, 11);
  save_model(path, m);
  const GaussianModel back = load_model(path);
  ASSERT_EQ(back.size(), m.size());
  for (size_t i = 0; i < m.size(); ++i) EXPECT_TRUE(back.gaussians[i] == m.gaussians[i]);
  EXPECT_THROW(load_model(temp_dir() / "nope.xvgs"), std::runtime_error);
}

TEST(Camera, TransformsAndPosition) {
  Camera cam;
  cam.fx = cam.fy = 50.0;
  cam.width = cam.height = 64;
  cam.translation = Vec3(1.0, 2.0, 3.0);
  EXPECT_LT((cam.to_camera(Vec3(4.0, 5.0, 6.0)) - Vec3(5.0, 7.0, 9.0)).cwiseAbs().maxCoeff(),
            1e-15);
  EXPECT_LT((cam.position() - Vec3(-1.0, -2.0, -3.0)).cwiseAbs().maxCoeff(), 1e-15);
  const Camera diag{.fx = 1, .fy = 1, .width = 30, .height = 40};
  EXPECT_DOUBLE_EQ(diag.image_diagonal(), 50.0);
}

TEST(Camera, ValidationRejectsBadParameters) {
  Camera cam;
  cam.fx = cam.fy = 50.0;
  cam.width = cam.height = 64;
  EXPECT_NO_THROW(validate_camera(cam));
  Camera bad = cam;
  bad.fx = 0.0;
  EXPECT_THROW(validate_camera(bad), std::invalid_argument);
  bad = cam;
  bad.width = 0;
  EXPECT_THROW(validate_camera(bad), std::invalid_argument);
  bad = cam;
  bad.rotation(0, 0) = 1.1;
  EXPECT_THROW(validate_camera(bad), std::invalid_argument);
}

TEST(Camera, LookAtProducesRigidFrameTowardTarget) {
  const Vec3 eye(3.0, -1.0, 1.5);
  const Vec3 target(0.0, 0.0, 0.0);
  const Camera cam = look_at_camera(eye, target, 60.0, 60.0, 64, 48);
  EXPECT_NO_THROW(validate_camera(cam));
  const Vec3 t = cam.to_camera(target);
  EXPECT_NEAR(t.x(), 0.0, 1e-12);
  EXPECT_NEAR(t.y(), 0.0, 1e-12);
  EXPECT_NEAR(t.z(), (target - eye).norm(), 1e-12);
  EXPECT_LT((cam.position() - eye).cwiseAbs().maxCoeff(), 1e-12);
  // Straight-down view is degenerate for a +z up vector.
  EXPECT_THROW(look_at_camera(Vec3(0, 0, 5), target, 60.0, 60.0, 64, 64),
               std::invalid_argument);
}

TEST(Image, QuantizationMatchesRounding) {
  EXPECT_EQ(quantize_channel(0.0), 0);
  EXPECT_EQ(quantize_channel(1.0), 255);
  EXPECT_EQ(quantize_channel(0.5), 128);  // round(127.5) away from zero
  EXPECT_EQ(quantize_channel(-0.2), 0);
  EXPECT_EQ(quantize_channel(1.7), 255);
}

TEST(Image, PpmRoundTripIsExactAfterQuantization) {
  Rng rng(8);
  ImageBuffer img(33, 17);
  for (double& v : img.data()) v = rng.uniform();
  const fs::path path = temp_dir() / "round.ppm";
  write_ppm(path, img);
  const ImageBuffer back = read_ppm(path);
  ASSERT_TRUE(back.same_shape(img));
  const ImageBuffer expected = quantize8(img);
  for (size_t i = 0; i < expected.data().size(); ++i)
    EXPECT_EQ(back.data()[i], expected.data()[i]);

  // Writing the re-read image reproduces the file byte for byte.
  const fs::path path2 = temp_dir() / "round2.ppm";
  write_ppm(path2, back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  EXPECT_EQ(s1.str(), s2.str());
}

TEST(Image, ReadRejectsMalformedFiles) {
  const fs::path bad_magic = temp_dir() / "bad_magic.ppm";
  {
    std::ofstream out(bad_magic, std::ios::binary);
    out << "P5\n2 2\n255\n";
    out.write("\0\0\0\0", 4);
  }
  EXPECT_THROW(read_ppm(bad_magic), std::runtime_error);

  const fs::path truncated = temp_dir() / "trunc.ppm";
  {
    std::ofstream out(truncated, std::ios::binary);
    out << "P6\n4 4\n255\n";
    out.write("\0\0\0", 3);
  }
  EXPECT_THROW(read_ppm(truncated), std::runtime_error);

  const fs::path deep = temp_dir() / "deep.ppm";
  {
    std::ofstream out(deep, std::ios::binary);
    out << "P6\n1 1\n65535\n";
    out.write("\0\0\0\0\0\0", 6);
  }
  EXPECT_THROW(read_ppm(deep), std::runtime_error);
  EXPECT_THROW(read_ppm(temp_dir() / "missing.ppm"), std::runtime_error);
}

TEST(Image, Quantize8IsIdempotent) {
  Rng rng(3);
  ImageBuffer img(5, 4);
  for (double& v : img.data()) v = rng.uniform();
  const ImageBuffer q1 = quantize8(img);
  const ImageBuffer q2 = quantize8(q1);
  for (size_t i = 0; i < q1.data().size(); ++i) EXPECT_EQ(q1.data()[i], q2.data()[i]);
}

}  // namespace
}  // namespace xvgs
