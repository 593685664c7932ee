#pragma once

#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

namespace afs {

/// Minimal CSV emitter. Floating-point values are printed with %.12g so
/// reruns produce byte-identical files.
class CsvWriter {
 public:
  /// An empty header writes nothing, for appending rows to an existing table.
  CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header) : os_(os) {
    if (header.size() == 0) return;
    bool first = true;
    for (auto h : header) {
      if (!first) os_ << ',';
      os_ << h;
      first = false;
    }
    os_ << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((emit(values, first)), ...);
    os_ << '\n';
  }

 private:
  template <typename T>
  void emit(const T& v, bool& first) {
    if (!first) os_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", static_cast<double>(v));
      os_ << buf;
    } else {
      os_ << v;
    }
  }

  std::ostream& os_;
};

}  // namespace afs
