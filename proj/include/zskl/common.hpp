#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace zskl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ClassId = int;
using Rng = std::mt19937_64;

/// Failure categories; the CLI maps Usage to exit code 2 and the rest to 1.
enum class ErrorKind { Usage, Io, Format, Shape, Domain, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string &what) {
    if (!cond) { fail(kind, what); }
}

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

inline void require_finite(const Matrix &m, const std::string &what) {
    require(m.allFinite(), ErrorKind::Numeric, what + ": non-finite entry");
}

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) { fail(ErrorKind::Format, "cannot format double"); }
    return {buf, ptr};
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) { s.remove_prefix(1); }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

/// Parses a decimal or scientific real. Accepts "nan"/"inf" spellings so the
/// caller can report them as non-finite instead of as malformed.
inline double parse_double(std::string_view text, const std::string &where) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') { text.remove_prefix(1); }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        fail(ErrorKind::Format, where + ": malformed number '" + std::string(text) + "'");
    }
    return v;
}

inline long long parse_int(std::string_view text, const std::string &where) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') { text.remove_prefix(1); }
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        fail(ErrorKind::Format, where + ": malformed integer '" + std::string(text) + "'");
    }
    return v;
}

/// Uniform index in [0, n) using rejection sampling on raw engine output, so
/// sequences are identical across standard library implementations.
inline std::size_t uniform_index(Rng &rng, std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = 0;
    do { r = rng(); } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
}

/// Fisher-Yates.
template <typename T>
void shuffle(std::vector<T> &v, Rng &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[uniform_index(rng, i)]);
    }
}

/// Standard normal draw via Box-Muller on 53-bit uniforms (portable across stdlibs).
inline double standard_normal(Rng &rng) {
    auto unit = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    const double u1 = unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace zskl
