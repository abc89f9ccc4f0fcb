#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "httplib.h"
#include "stylebench/image_io.hpp"
#include "stylebench/metrics.hpp"
#include "stylebench/stylizer.hpp"
#include "test_support.hpp"

using namespace stylebench;
using stylebench::test::fixture;
using stylebench::test::TempDir;

namespace {

ErrorCode code_of(const StylizeRequest& req) {
  try {
    stylize(req);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::invalid_argument;
}

struct Stats {
  double mean, sd;
};

Stats stats_of(const RasterImage& img, int c) {
  long double sum = 0, sq = 0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) sum += img.data()[i * img.channels() + c];
  const long double mean = sum / img.pixel_count();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const long double d = img.data()[i * img.channels() + c] - mean;
    sq += d * d;
  }
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(sq / img.pixel_count()))};
}

int max_abs_diff(const RasterImage& a, const RasterImage& b) {
  int worst = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    worst = std::max(worst, std::abs(int(a.data()[i]) - int(b.data()[i])));
  }
  return worst;
}

}  // namespace

TEST(StylizeStatistical, IdentityWhenStyleEqualsContent) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const RasterImage img = test::random_image(rng, 8 + i, 6, 3);
    EXPECT_LE(max_abs_diff(stylize_statistical(img, img), img), 1);
  }
}

TEST(StylizeStatistical, ConstantStyleForcesConstantOutput) {
  std::mt19937_64 rng(2);
  const RasterImage content = test::random_image(rng, 10, 10, 3);
  RasterImage style(4, 4, 3);
  std::fill(style.data().begin(), style.data().end(), std::uint8_t{93});
  const RasterImage out = stylize_statistical(content, style);
  for (auto v : out.data()) EXPECT_EQ(v, 93);
}

TEST(StylizeStatistical, ConstantContentMapsToStyleMean) {
  RasterImage content(3, 3, 1);
  std::fill(content.data().begin(), content.data().end(), std::uint8_t{40});
  const RasterImage style(2, 1, 1, {100, 201});  // mean 150.5 -> 151
  const RasterImage out = stylize_statistical(content, style);
  for (auto v : out.data()) EXPECT_EQ(v, 151);
}

// Mid-range samples keep the transferred values off the clamp boundaries.
TEST(StylizeStatistical, OutputStatsMatchStyle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const RasterImage content = test::random_image(rng, 8, 8, 3, 64, 191);
    const RasterImage style = test::random_image(rng, 8, 8, 3, 64, 191);
    const RasterImage out = stylize_statistical(content, style);
    for (int c = 0; c < 3; ++c) {
      const Stats o = stats_of(out, c);
      const Stats s = stats_of(style, c);
      EXPECT_NEAR(o.mean, s.mean, 1.0);
      EXPECT_NEAR(o.sd, s.sd, 1.0);
    }
  }
}

TEST(StylizeStatistical, MatchesClosedFormPerSample) {
  std::mt19937_64 rng(4);
  const RasterImage content = test::random_image(rng, 9, 7, 3);
  const RasterImage style = test::random_image(rng, 5, 5, 3);
  const RasterImage out = stylize_statistical(content, style);
  for (int c = 0; c < 3; ++c) {
    const Stats cs = stats_of(content, c);
    const Stats ss = stats_of(style, c);
    for (std::size_t i = 0; i < content.pixel_count(); ++i) {
      const int expected = test::oracle::transfer_sample(content.data()[i * 3 + c], cs.mean, cs.sd, ss.mean, ss.sd);
      EXPECT_NEAR(out.data()[i * 3 + c], expected, 1);
    }
  }
}

TEST(StylizeStatistical, SharedOffsetShiftsOutput) {
  // Content and style confined to [40, 140] and shifted by +60: no clamping
  // occurs, so every output sample must move by 60 up to rounding.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> sample(40, 140);
  auto make = [&](int w, int h) {
    std::vector<std::uint8_t> d(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : d) v = static_cast<std::uint8_t>(sample(rng));
    return RasterImage(w, h, 3, d);
  };
  auto shifted = [](RasterImage img, int k) {
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(v + k);
    return img;
  };
  for (int trial = 0; trial < 10; ++trial) {
    const RasterImage content = make(8, 8);
    RasterImage style = make(6, 6);
    // Narrow the style spread so the mapped range stays inside [0, 255].
    for (auto& v : style.data()) v = static_cast<std::uint8_t>(90 + (v - 90) / 3);
    const RasterImage base = stylize_statistical(content, style);
    const RasterImage moved = stylize_statistical(shifted(content, 60), shifted(style, 60));
    for (std::size_t i = 0; i < base.data().size(); ++i) {
      EXPECT_NEAR(int(moved.data()[i]) - int(base.data()[i]), 60, 1);
    }
  }
}

TEST(StylizeStatistical, RestylingIsStableInMeans) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const RasterImage content = test::random_image(rng, 12, 12, 3);
    const RasterImage style = test::random_image(rng, 12, 12, 3);
    const RasterImage once = stylize_statistical(content, style);
    const RasterImage twice = stylize_statistical(once, style);
    for (int c = 0; c < 3; ++c) EXPECT_LT(std::abs(stats_of(once, c).mean - stats_of(twice, c).mean), 1.0);
  }
}

TEST(StylizeStatistical, AlphaPassedThroughAndChannelMismatch) {
  std::mt19937_64 rng(7);
  const RasterImage content = test::random_image(rng, 5, 5, 4);
  const RasterImage style = test::random_image(rng, 5, 5, 3);
  const RasterImage out = stylize_statistical(content, style);
  ASSERT_EQ(out.channels(), 4);
  for (std::size_t i = 0; i < content.pixel_count(); ++i) EXPECT_EQ(out.data()[i * 4 + 3], content.data()[i * 4 + 3]);

  StylizeRequest bad{RasterImage(4, 4, 1), RasterImage(4, 4, 3), StylizerBackend::statistical, {}};
  EXPECT_EQ(code_of(bad), ErrorCode::channel_count_mismatch);
}

TEST(Stylize, StatisticalDispatchIsDeterministic) {
  std::mt19937_64 rng(8);
  StylizeRequest req{test::random_image(rng, 16, 12, 3), test::random_image(rng, 20, 20, 3), StylizerBackend::statistical, {}};
  const StylizeResult a = stylize(req);
  const StylizeResult b = stylize(req);
  EXPECT_EQ(a.backend_used, StylizerBackend::statistical);
  EXPECT_GE(a.style_transfer_time, 0.0);
  EXPECT_EQ(a.stylized, b.stylized);
  EXPECT_EQ(a.stylized.width(), 16);
  EXPECT_EQ(a.stylized.height(), 12);
}

TEST(Stylize, IdentityCompositionHasUnitSsim) {
  const RasterImage content = load_image(fixture("content_64.png"));
  const StylizeResult r = stylize({content, content, StylizerBackend::statistical, {}});
  EXPECT_NEAR(ssim_global(to_luma(content), to_luma(r.stylized)), 1.0, 1e-6);
}

// ---------------------------------------------------------------------------
// External backend: subprocess test doubles

TEST(StylizeExternal, EchoBackendReturnsContent) {
  TempDir dir;
  const auto script = test::write_script(dir / "echo.sh", "cp \"$1\" \"$3\"");
  const RasterImage content = load_image(fixture("content_64.png"));
  StylizeRequest req{content, load_image(fixture("style_48x40.png")), StylizerBackend::external,
                     {{"command", script.string()}}};
  const StylizeResult r = stylize(req);
  EXPECT_EQ(r.backend_used, StylizerBackend::external);
  EXPECT_EQ(r.stylized, content);
  EXPECT_FALSE(r.resized_to_content);
  EXPECT_EQ(ssim_global(to_luma(content), to_luma(r.stylized)), 1.0);
}

TEST(StylizeExternal, FixtureBackendIsResizedToContent) {
  TempDir dir;
  const auto fixed = fixture("style_48x40.png");
  const auto script = test::write_script(dir / "fixed.sh", "cp '" + fixed.string() + "' \"$3\"");
  const RasterImage content = load_image(fixture("content_64.png"));
  StylizeRequest req{content, content, StylizerBackend::external, {{"command", script.string()}}};
  const StylizeResult r = stylize(req);
  EXPECT_TRUE(r.resized_to_content);
  EXPECT_EQ(r.stylized.width(), content.width());
  EXPECT_EQ(r.stylized.height(), content.height());
  EXPECT_EQ(r.stylized, resize_bilinear(load_image(fixed), 64, 64));
}

TEST(StylizeExternal, ErrorsAreClassified) {
  TempDir dir;
  const RasterImage img(4, 4, 3);
  auto req_for = [&](BackendOptions opts) { return StylizeRequest{img, img, StylizerBackend::external, opts}; };

  EXPECT_EQ(code_of(req_for({{"command", "/nonexistent/stylize-backend"}})), ErrorCode::backend_unavailable);
  EXPECT_EQ(code_of(req_for({})), ErrorCode::backend_unavailable);

  const auto fails = test::write_script(dir / "fail.sh", "exit 3");
  EXPECT_EQ(code_of(req_for({{"command", fails.string()}})), ErrorCode::backend_protocol_error);

  const auto silent = test::write_script(dir / "silent.sh", "exit 0");
  EXPECT_EQ(code_of(req_for({{"command", silent.string()}})), ErrorCode::backend_protocol_error);

  const auto garbage = test::write_script(dir / "garbage.sh", "echo nonsense > \"$3\"");
  EXPECT_EQ(code_of(req_for({{"command", garbage.string()}})), ErrorCode::backend_protocol_error);

  const auto slow = test::write_script(dir / "slow.sh", "sleep 5; cp \"$1\" \"$3\"");
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of(req_for({{"command", slow.string()}, {"timeout", "0.3"}})), ErrorCode::backend_timeout);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 3.0);
}

TEST(StylizeExternal, ErrorNamesTheBackend) {
  const RasterImage img(4, 4, 3);
  try {
    stylize({img, img, StylizerBackend::external, {{"command", "/nonexistent/stylize-backend"}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/stylize-backend"), std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// External backend: HTTP test double

namespace {

class EchoHttpBackend {
 public:
  EchoHttpBackend() {
    server_.Post("/stylize", [](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_file("content") || !req.has_file("style")) {
        res.status = 400;
        return;
      }
      res.set_content(req.get_file_value("content").content, "image/png");
    });
    server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~EchoHttpBackend() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(StylizeExternal, HttpEchoEndpoint) {
  EchoHttpBackend backend;
  std::mt19937_64 rng(9);
  const RasterImage content = test::random_image(rng, 10, 8, 3);
  const StylizeResult r =
      stylize({content, test::random_image(rng, 3, 3, 3), StylizerBackend::external,
               {{"endpoint", backend.url("/stylize")}, {"timeout", "5"}}});
  EXPECT_EQ(r.stylized, content);

  EXPECT_EQ(code_of({content, content, StylizerBackend::external, {{"endpoint", backend.url("/broken")}}}),
            ErrorCode::backend_protocol_error);
}

TEST(StylizeExternal, HttpUnreachable) {
  // Grab a free port and close it again so nothing is listening there.
  const int port = test::unused_local_port();
  const RasterImage img(4, 4, 3);
  EXPECT_EQ(code_of({img, img, StylizerBackend::external,
                     {{"endpoint", "http://127.0.0.1:" + std::to_string(port) + "/stylize"}, {"timeout", "2"}}}),
            ErrorCode::backend_unavailable);
}
