#include "cosparse/service.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

namespace cosparse {

namespace {

using nlohmann::json;

double segment_distance_sq(double px, double py, const std::array<double, 2>& a,
                           const std::array<double, 2>& b) {
  const double vx = b[0] - a[0];
  const double vy = b[1] - a[1];
  const double len_sq = vx * vx + vy * vy;
  double t = len_sq > 0.0 ? ((px - a[0]) * vx + (py - a[1]) * vy) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a[0] + t * vx);
  const double dy = py - (a[1] + t * vy);
  return dx * dx + dy * dy;
}

void validate_strokes(const std::vector<Stroke>& strokes) {
  std::set<int> labels;
  for (std::size_t s = 0; s < strokes.size(); ++s) {
    const auto& st = strokes[s];
    if (st.label < 1) throw ServiceError(400, fmt::format("stroke {}: label must be >= 1", s));
    if (st.points.empty()) throw ServiceError(400, fmt::format("stroke {}: no points", s));
    if (!(st.width > 0.0) || !std::isfinite(st.width))
      throw ServiceError(400, fmt::format("stroke {}: width must be positive", s));
    for (const auto& p : st.points)
      if (!std::isfinite(p[0]) || !std::isfinite(p[1]))
        throw ServiceError(400, fmt::format("stroke {}: non-finite point", s));
    labels.insert(st.label);
  }
  int expected = 1;
  for (int l : labels)
    if (l != expected++)
      throw ServiceError(422, fmt::format("stroke labels must be contiguous from 1: label {} missing",
                                          expected - 1));
}

json response_json(const SegmentResponse& r) {
  return {{"labels_png", base64_encode(r.labels_png)},
          {"energy", r.energy},
          {"gap", r.gap},
          {"iterations", r.iterations},
          {"millis", r.millis},
          {"labels", r.labels},
          {"stroke_version", r.stroke_version}};
}

std::vector<Stroke> strokes_from_json(const json& body) {
  if (!body.is_object() || !body.contains("strokes") || !body["strokes"].is_array())
    throw ServiceError(400, "body must be an object with a 'strokes' array");
  std::vector<Stroke> strokes;
  for (const auto& s : body["strokes"]) {
    Stroke st;
    try {
      st.label = s.at("label").get<int>();
      for (const auto& p : s.at("points")) {
        if (!p.is_array() || p.size() != 2) throw ServiceError(400, "points must be [x, y] pairs");
        st.points.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      if (s.contains("width")) st.width = s["width"].get<double>();
    } catch (const json::exception& e) {
      throw ServiceError(400, fmt::format("malformed stroke: {}", e.what()));
    }
    strokes.push_back(std::move(st));
  }
  return strokes;
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

template <typename Handler>
auto guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const ServiceError& e) {
      reply_error(res, e.status(), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, fmt::format("malformed JSON: {}", e.what()));
    } catch (const DivergenceError& e) {
      reply_error(res, 500, e.what());
    } catch (const Error& e) {
      reply_error(res, 422, e.what());
    }
  };
}

}  // namespace

Field<int> rasterize_strokes(int width, int height, const std::vector<Stroke>& strokes) {
  Field<int> mask(width, height, 0);
  for (const auto& st : strokes) {
    const double r = 0.5 * st.width;
    const double r_sq = r * r;
    for (std::size_t k = 0; k < st.points.size(); ++k) {
      const auto& a = st.points[k];
      const auto& b = st.points[k + 1 < st.points.size() ? k + 1 : k];
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a[0], b[0]) - r)));
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a[0], b[0]) + r)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a[1], b[1]) - r)));
      const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a[1], b[1]) + r)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
          if (segment_distance_sq(x + 0.5, y + 0.5, a, b) <= r_sq) mask(x, y) = st.label;
    }
  }
  return mask;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  if (text.rfind("data:", 0) == 0) {
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw ServiceError(400, "malformed data URL");
    text.remove_prefix(comma + 1);
  }
  std::string clean;
  clean.reserve(text.size());
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  if (clean.size() % 4 != 0) throw ServiceError(400, "invalid base64 payload");
  Bytes out(clean.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw ServiceError(400, "invalid base64 payload");
  std::size_t padding = 0;
  for (auto it = clean.rbegin(); it != clean.rend() && *it == '=' && padding < 2; ++it) ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

SessionService::SessionService(ServiceConfig config, AnalysisOperator op)
    : config_(std::move(config)), op_(std::move(op)) {
  config_.segmentation.mode = Mode::supervised;
  config_.segmentation.validate();
  if (config_.segmentation.patch_side * config_.segmentation.patch_side != op_.patch_len())
    throw ConfigError("operator width does not match the configured patch side");
}

std::string SessionService::create_session(std::span<const std::uint8_t> payload) {
  ColorImage image;
  try {
    image = decode_image(payload);
  } catch (const ImageIoError& e) {
    throw ServiceError(400, fmt::format("image decode failed: {}", e.what()));
  }
  if (image.pixel_count() > config_.max_pixels)
    throw ServiceError(413, fmt::format("image has {} pixels, limit is {}", image.pixel_count(),
                                        config_.max_pixels));
  auto session = std::make_shared<Session>();
  session->image = std::move(image);

  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::unique_lock lock(sessions_mutex_);
  std::string id;
  do {
    id = fmt::format("{:016x}{:08x}", rng(), ++counter_);
  } while (sessions_.contains(id));
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, fmt::format("unknown session '{}'", id));
  return it->second;
}

std::uint64_t SessionService::update_strokes(const std::string& id, std::vector<Stroke> strokes) {
  auto session = find(id);
  validate_strokes(strokes);
  std::lock_guard lock(session->state);
  session->strokes = std::move(strokes);
  return ++session->version;
}

SegmentResponse SessionService::run_segmentation(const std::string& id) {
  auto session = find(id);
  std::unique_lock run(session->running, std::try_to_lock);
  if (!run.owns_lock()) throw ServiceError(409, "a segmentation is already running for this session");

  Field<int> mask;
  std::uint64_t version = 0;
  {
    std::lock_guard lock(session->state);
    std::set<int> labels;
    for (const auto& s : session->strokes) labels.insert(s.label);
    if (labels.size() < 2)
      throw ServiceError(422, "segmentation needs strokes for at least two labels");
    mask = rasterize_strokes(session->image.width(), session->image.height(), session->strokes);
    version = session->version;
  }

  SegmentationResult result;
  try {
    result = segment_supervised(session->image, mask, config_.segmentation, op_);
  } catch (const DivergenceError&) {
    throw;
  } catch (const Error& e) {
    throw ServiceError(422, e.what());
  }
  SegmentResponse response;
  response.labels_png = encode_label_png(result.segmentation);
  response.energy = result.diagnostics.energy;
  response.gap = result.diagnostics.gap;
  response.iterations = result.diagnostics.iterations;
  response.millis = result.diagnostics.millis;
  for (int l : result.diagnostics.active_labels) response.labels.push_back(l + 1);
  response.stroke_version = version;

  std::lock_guard lock(session->state);
  session->last = response;
  return response;
}

std::optional<SegmentResponse> SessionService::last_result(const std::string& id) const {
  auto session = find(id);
  std::lock_guard lock(session->state);
  return session->last;
}

Bytes SessionService::scribble_mask_png(const std::string& id) const {
  auto session = find(id);
  std::lock_guard lock(session->state);
  auto mask = rasterize_strokes(session->image.width(), session->image.height(), session->strokes);
  int top = 0;
  for (auto& v : mask.values()) {
    top = std::max(top, v);
    v -= 1;
  }
  return encode_label_png({std::move(mask), top});
}

void SessionService::delete_session(const std::string& id) {
  std::unique_lock lock(sessions_mutex_);
  if (sessions_.erase(id) == 0) throw ServiceError(404, fmt::format("unknown session '{}'", id));
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

void register_routes(httplib::Server& server, SessionService& service) {
  server.Post("/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    if (!body.is_object() || !body.contains("image") || !body["image"].is_string())
      throw ServiceError(400, "body must be an object with a base64 'image' string");
    const auto id = service.create_session(base64_decode(body["image"].get<std::string>()));
    res.status = 201;
    res.set_content(json{{"id", id}}.dump(), "application/json");
  }));

  server.Put(R"(/sessions/([0-9a-f]+)/strokes)",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               const auto version =
                   service.update_strokes(req.matches[1], strokes_from_json(json::parse(req.body)));
               res.set_content(json{{"accepted", true}, {"stroke_version", version}}.dump(),
                               "application/json");
             }));

  server.Post(R"(/sessions/([0-9a-f]+)/segment)",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const auto r = service.run_segmentation(req.matches[1]);
                res.set_content(response_json(r).dump(), "application/json");
              }));

  server.Get(R"(/sessions/([0-9a-f]+)/result)",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               const auto r = service.last_result(req.matches[1]);
               if (!r) throw ServiceError(404, "no segmentation has been run for this session");
               res.set_content(response_json(*r).dump(), "application/json");
             }));

  server.Get(R"(/sessions/([0-9a-f]+)/mask)",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               const auto png = service.scribble_mask_png(req.matches[1]);
               res.set_content(json{{"mask_png", base64_encode(png)}}.dump(), "application/json");
             }));

  server.Delete(R"(/sessions/([0-9a-f]+))",
                guarded([&service](const httplib::Request& req, httplib::Response& res) {
                  service.delete_session(req.matches[1]);
                  res.status = 204;
                }));
}

}  // namespace cosparse
