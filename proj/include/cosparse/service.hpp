#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cosparse/image_io.hpp"
#include "cosparse/pipeline.hpp"

namespace httplib {
class Server;
}

namespace cosparse {

/// Polyline in image coordinates; pixel (x, y) covers [x, x+1) x [y, y+1).
struct Stroke {
  int label = 1;
  std::vector<std::array<double, 2>> points;
  double width = 13.0;
};

/// Paints every pixel whose centre lies within width/2 of a stroke's polyline
/// with the stroke label; later strokes win. Unpainted pixels are 0.
Field<int> rasterize_strokes(int width, int height, const std::vector<Stroke>& strokes);

/// Error carrying the HTTP status it maps to.
class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Accepts an optional "data:...;base64," prefix and embedded whitespace.
Bytes base64_decode(std::string_view text);

struct ServiceConfig {
  std::size_t max_pixels = 4'000'000;
  SegConfig segmentation = SegConfig::supervised_defaults();
};

struct SegmentResponse {
  Bytes labels_png;
  double energy = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double millis = 0.0;
  std::vector<int> labels;  // one-based labels present in the result
  std::uint64_t stroke_version = 0;
};

/// In-memory interactive sessions. Sessions run concurrently; within one
/// session mutations are serialized and a second concurrent run is rejected
/// with status 409.
class SessionService {
 public:
  SessionService(ServiceConfig config, AnalysisOperator op);

  std::string create_session(std::span<const std::uint8_t> image_payload);
  /// Replaces the stroke set atomically; returns the new stroke version.
  std::uint64_t update_strokes(const std::string& id, std::vector<Stroke> strokes);
  SegmentResponse run_segmentation(const std::string& id);
  std::optional<SegmentResponse> last_result(const std::string& id) const;
  /// Rasterized scribble mask as an indexed PNG (value = label, 0 unlabeled).
  Bytes scribble_mask_png(const std::string& id) const;
  void delete_session(const std::string& id);
  std::size_t session_count() const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Session {
    ColorImage image;
    std::vector<Stroke> strokes;
    std::uint64_t version = 0;
    std::optional<SegmentResponse> last;
    mutable std::mutex state;
    std::mutex running;
  };

  std::shared_ptr<Session> find(const std::string& id) const;

  ServiceConfig config_;
  AnalysisOperator op_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

/// Registers the REST endpoints (JSON bodies, base64 image payloads).
void register_routes(httplib::Server& server, SessionService& service);

}  // namespace cosparse
