#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace effrec {

/// Collects one line per algorithm case entered, indented by nesting depth.
/// A default-constructed Tracer records nothing.
class Tracer {
 public:
  Tracer() = default;
  explicit Tracer(std::vector<std::string>* sink) : sink_(sink) {}

  bool enabled() const { return sink_ != nullptr; }

  void line(std::string_view rule, std::string_view detail) {
    if (!sink_) return;
    std::string out(static_cast<std::size_t>(depth_) * 2, ' ');
    out += rule;
    if (!detail.empty()) {
      out += ' ';
      out += detail;
    }
    sink_->push_back(std::move(out));
  }

  class Nest {
   public:
    explicit Nest(Tracer& t) : t_(t) { ++t_.depth_; }
    ~Nest() { --t_.depth_; }
    Nest(const Nest&) = delete;
    Nest& operator=(const Nest&) = delete;

   private:
    Tracer& t_;
  };

 private:
  std::vector<std::string>* sink_ = nullptr;
  int depth_ = 0;
};

}  // namespace effrec
