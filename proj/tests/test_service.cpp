#include "cosparse/image_io.hpp"
#include "cosparse/pipeline.hpp"
#include "cosparse/service.hpp"
#include "synthetic.hpp"

// httplib after Eigen-dependent headers: resolv.h defines a `_res` macro.
#include <httplib.h>
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <future>
#include <json.hpp>
#include <random>
#include <thread>

using namespace cosparse;
using json = nlohmann::json;

namespace {

double segment_distance(double px, double py, std::array<double, 2> a, std::array<double, 2> b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a[0]) * vx + (py - a[1]) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - a[0] - t * vx, py - a[1] - t * vy);
}

Field<int> rasterize_oracle(int w, int h, const std::vector<Stroke>& strokes) {
  Field<int> out(w, h, 0);
  for (const auto& s : strokes)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double d = 1e300;
        for (std::size_t i = 0; i < s.points.size(); ++i)
          d = std::min(d, segment_distance(x + 0.5, y + 0.5, s.points[i],
                                           s.points[std::min(i + 1, s.points.size() - 1)]));
        if (d <= s.width / 2) out(x, y) = s.label;
      }
  return out;
}

Bytes stripe_png(int size) {
  auto c = testing::stripe_disk(size, size / 3.0);
  return encode_png(c.image);
}

std::vector<Stroke> two_strokes(int size) {
  const double mid = size / 2.0;
  return {{1, {{mid - 3, mid}, {mid + 3, mid}}, 5.0}, {2, {{2, 2}, {size / 4.0, 2}}, 5.0}};
}

ServiceConfig fast_config() {
  ServiceConfig cfg;
  cfg.segmentation.patch_side = 5;
  return cfg;
}

}  // namespace

TEST_CASE("stroke rasterization matches the distance oracle") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> coord(-5.0, 45.0), width(1.0, 15.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<Stroke> strokes;
    for (int s = 0; s < 3; ++s) {
      Stroke st{s + 1, {}, width(rng)};
      for (int p = 0; p < 1 + t % 4; ++p) st.points.push_back({coord(rng), coord(rng)});
      strokes.push_back(st);
    }
    CHECK(rasterize_strokes(40, 30, strokes) == rasterize_oracle(40, 30, strokes));
  }
}

TEST_CASE("a width 13 dot covers the pixels within 6.5") {
  auto mask = rasterize_strokes(20, 20, {{1, {{10.5, 10.5}}, 13.0}});
  int count = 0;
  for (int v : mask.values()) count += v;
  int expected = 0;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) expected += std::hypot(x - 10, y - 10) <= 6.5;
  CHECK(count == expected);
}

TEST_CASE("base64") {
  Bytes data{0, 1, 2, 250, 251, 255, 'a'};
  const auto text = base64_encode(data);
  CHECK(base64_decode(text) == data);
  CHECK(base64_decode("data:image/png;base64," + text) == data);
  CHECK(base64_encode(Bytes{'M', 'a', 'n'}) == "TWFu");
  CHECK(base64_decode("TW\nE=") == Bytes{'M', 'a'});
  try {
    base64_decode("@@@");
    FAIL("expected error");
  } catch (const ServiceError& e) {
    CHECK(e.status() == 400);
  }
}

TEST_CASE("session lifecycle") {
  SessionService service(fast_config(), default_operator(5, 2.0));
  const auto png = stripe_png(40);
  const auto id = service.create_session(png);
  const auto other = service.create_session(png);
  CHECK(id != other);
  CHECK(service.session_count() == 2);

  CHECK(service.update_strokes(id, two_strokes(40)) == 1);
  auto mask = decode_index_map(service.scribble_mask_png(id));
  CHECK(mask == rasterize_strokes(40, 40, two_strokes(40)));

  auto r1 = service.run_segmentation(id);
  CHECK(r1.labels == std::vector<int>{1, 2});
  CHECK(r1.stroke_version == 1);
  auto r2 = service.run_segmentation(id);
  CHECK(r1.labels_png == r2.labels_png);
  auto labels = decode_label_png(r1.labels_png);
  CHECK(labels.labels.width() == 40);
  REQUIRE(service.last_result(id));
  CHECK(service.last_result(id)->labels_png == r2.labels_png);
  CHECK_FALSE(service.last_result(other));

  auto status_of = [](auto&& fn) {
    try {
      fn();
    } catch (const ServiceError& e) {
      return e.status();
    }
    return 0;
  };
  CHECK(status_of([&] { service.update_strokes(id, {{1, {{1, 1}}, 3}, {3, {{9, 9}}, 3}}); }) == 422);
  CHECK(status_of([&] { service.update_strokes(id, {{1, {{1, 1}}, 3}}); }) == 0);
  CHECK(status_of([&] { service.run_segmentation(id); }) == 422);
  CHECK(service.update_strokes(id, {}) == 3);
  CHECK(status_of([&] { service.run_segmentation(id); }) == 422);
  CHECK(status_of([&] { service.run_segmentation("ffff"); }) == 404);
  CHECK(status_of([&] { service.create_session(Bytes{1, 2, 3}); }) == 400);

  service.delete_session(id);
  CHECK(status_of([&] { service.last_result(id); }) == 404);
  CHECK(status_of([&] { service.delete_session(id); }) == 404);
  CHECK(service.session_count() == 1);
}

TEST_CASE("oversized images are refused") {
  ServiceConfig cfg = fast_config();
  cfg.max_pixels = 100;
  SessionService service(cfg, default_operator(5, 2.0));
  try {
    service.create_session(stripe_png(20));
    FAIL("expected error");
  } catch (const ServiceError& e) {
    CHECK(e.status() == 413);
  }
}

TEST_CASE("a second concurrent run on one session is busy") {
  // Large enough that the first run is still busy when the second arrives.
  SessionService service(ServiceConfig{}, default_operator(9, 2.0));
  const auto id = service.create_session(stripe_png(400));
  service.update_strokes(id, two_strokes(400));
  auto first = std::async(std::launch::async, [&] { return service.run_segmentation(id); });
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  int status = 0;
  try {
    service.run_segmentation(id);
  } catch (const ServiceError& e) {
    status = e.status();
  }
  CHECK(status == 409);
  CHECK(first.get().labels == std::vector<int>{1, 2});
}

TEST_CASE("rest endpoints") {
  SessionService service(fast_config(), default_operator(5, 2.0));
  httplib::Server server;
  register_routes(server, service);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread runner([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  auto created = client.Post("/sessions", json{{"image", base64_encode(stripe_png(40))}}.dump(),
                             "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto id = json::parse(created->body)["id"].get<std::string>();

  json strokes = json::array();
  for (const auto& s : two_strokes(40)) {
    json pts = json::array();
    for (auto p : s.points) pts.push_back({p[0], p[1]});
    strokes.push_back({{"label", s.label}, {"points", pts}, {"width", s.width}});
  }
  auto put = client.Put("/sessions/" + id + "/strokes", json{{"strokes", strokes}}.dump(),
                        "application/json");
  REQUIRE(put);
  CHECK(put->status == 200);
  CHECK(json::parse(put->body)["accepted"] == true);

  auto mask = client.Get("/sessions/" + id + "/mask");
  REQUIRE(mask);
  auto mask_png = base64_decode(json::parse(mask->body)["mask_png"].get<std::string>());
  CHECK(decode_index_map(mask_png) == rasterize_strokes(40, 40, two_strokes(40)));

  auto seg = client.Post("/sessions/" + id + "/segment", "", "application/json");
  REQUIRE(seg);
  CHECK(seg->status == 200);
  auto body = json::parse(seg->body);
  for (const char* key : {"labels_png", "energy", "gap", "iterations", "millis"}) CHECK(body.contains(key));
  CHECK(body["labels"] == json::array({1, 2}));

  auto last = client.Get("/sessions/" + id + "/result");
  REQUIRE(last);
  CHECK(json::parse(last->body)["labels_png"] == body["labels_png"]);

  auto bad = client.Put("/sessions/" + id + "/strokes", "{\"strokes\": 3}", "application/json");
  CHECK(bad->status == 400);
  auto gap = client.Put("/sessions/" + id + "/strokes",
                        R"({"strokes": [{"label": 1, "points": [[1,1]]}, {"label": 3, "points": [[5,5]]}]})",
                        "application/json");
  CHECK(gap->status == 422);
  CHECK(json::parse(gap->body).contains("error"));
  auto corrupt = client.Post("/sessions", R"({"image": "AAAA"})", "application/json");
  CHECK(corrupt->status == 400);
  auto not_json = client.Post("/sessions", "nope", "application/json");
  CHECK(not_json->status == 400);

  auto del = client.Delete("/sessions/" + id);
  CHECK(del->status == 204);
  auto gone = client.Get("/sessions/" + id + "/result");
  CHECK(gone->status == 404);

  server.stop();
  runner.join();
}
