#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "blowup.hpp"
#include "errors.hpp"
#include "extension.hpp"
#include "operator.hpp"
#include "params.hpp"
#include "solver.hpp"
#include "version.hpp"

namespace fraclap::io {

using json = nlohmann::ordered_json;

/// Config document that failed validation. what() joins every violation on its own line.
class ConfigError : public ParameterError {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : ParameterError(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) out += (out.empty() ? "" : "\n") + s;
        return out;
    }
    std::vector<std::string> violations_;
};

/// Malformed JSON, with the 1-based line and column of the failure.
class SyntaxError : public InputError {
public:
    SyntaxError(const std::string& what, std::size_t line, std::size_t column)
        : InputError(what), line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_, column_;
};

struct ExperimentConfig {
    int n = 1;
    double alpha = 0.5;
    DomainSpec domain = DomainSpec::interval(-1.0, 1.0);
    double h = 1.0 / 200.0;
    SolveConfig solve{};
    QuadConfig quad{};
    ExtensionConfig extension{};

    FracParams params() const { return FracParams(n, alpha); }
};

inline json domain_to_json(const DomainSpec& d) {
    switch (d.shape) {
        case DomainSpec::Shape::interval: return json{{"type", "interval"}, {"a", d.a}, {"b", d.b}};
        case DomainSpec::Shape::square:
            return json{{"type", "square"}, {"center", {d.center.x, d.center.y}}, {"half_width", d.half_width}};
        case DomainSpec::Shape::disc:
            return json{{"type", "disc"}, {"center", {d.center.x, d.center.y}}, {"radius", d.half_width}};
    }
    return {};
}

inline json to_json(const ExperimentConfig& c) {
    return json{
        {"n", c.n},
        {"alpha", c.alpha},
        {"domain", domain_to_json(c.domain)},
        {"h", c.h},
        {"solve",
         {{"p", c.solve.p},
          {"newton_tol", c.solve.newton_tol},
          {"max_iters", c.solve.max_iters},
          {"max_halvings", c.solve.max_halvings},
          {"continuation", c.solve.continuation},
          {"max_step", c.solve.max_step},
          {"min_step", c.solve.min_step}}},
        {"quad",
         {{"delta", c.quad.delta},
          {"r_far", c.quad.r_far},
          {"tol", c.quad.tol},
          {"max_subdivisions", c.quad.max_subdivisions}}},
        {"extension",
         {{"y_max", c.extension.y_max},
          {"nx", c.extension.nx},
          {"ny", c.extension.ny},
          {"grading", c.extension.grading},
          {"calibrate", c.extension.calibrate},
          {"far_field", c.extension.far_field == FarField::zero ? "zero" : "monopole"}}},
    };
}

namespace detail {

inline void line_column(std::string_view text, std::size_t offset, std::size_t& line, std::size_t& column) {
    line = 1;
    column = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
}

class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    template <class T>
    void get(const json& obj, const char* key, const std::string& path, T& out) {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::invalid_argument("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw std::invalid_argument("");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw std::invalid_argument("");
            }
            out = v.get<T>();
        } catch (const std::exception&) {
            errors_.push_back(path + key + ": wrong type (" + std::string(v.type_name()) + ")");
        }
    }

    void unknown_keys(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (std::find_if(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }) == known.end())
                errors_.push_back(path + it.key() + ": unknown key");
        }
    }

    const json* object(const json& obj, const char* key, const std::string& path) {
        if (!obj.contains(key)) return nullptr;
        if (!obj.at(key).is_object()) {
            errors_.push_back(path + key + ": must be an object");
            return nullptr;
        }
        return &obj.at(key);
    }

    void fail(std::string msg) { errors_.push_back(std::move(msg)); }

private:
    std::vector<std::string>& errors_;
};

inline std::string num(double v) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << v;
    return s.str();
}

}  // namespace detail

/// Parses and validates a JSON config. Collects every violation before throwing ConfigError.
inline ExperimentConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        std::size_t line = 0, column = 0;
        detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0, line, column);
        throw SyntaxError("config syntax error at line " + std::to_string(line) + ", column " +
                              std::to_string(column) + ": " + e.what(),
                          line, column);
    }
    if (!doc.is_object()) throw SyntaxError("config document must be a JSON object", 1, 1);

    std::vector<std::string> errors;
    detail::Reader rd(errors);
    ExperimentConfig c;
    rd.unknown_keys(doc, "", {"n", "alpha", "domain", "h", "p", "solve", "quad", "extension"});
    rd.get(doc, "n", "", c.n);
    rd.get(doc, "alpha", "", c.alpha);
    rd.get(doc, "h", "", c.h);
    rd.get(doc, "p", "", c.solve.p);

    if (const json* d = rd.object(doc, "domain", "")) {
        std::string type = "interval";
        rd.get(*d, "type", "domain.", type);
        std::vector<double> center{0.0, 0.0};
        double a = -1.0, b = 1.0, hw = 1.0, radius = 1.0;
        rd.get(*d, "a", "domain.", a);
        rd.get(*d, "b", "domain.", b);
        rd.get(*d, "center", "domain.", center);
        rd.get(*d, "half_width", "domain.", hw);
        rd.get(*d, "radius", "domain.", radius);
        if (center.size() != 2) rd.fail("domain.center: needs two coordinates");
        try {
            if (type == "interval") {
                rd.unknown_keys(*d, "domain.", {"type", "a", "b"});
                c.domain = DomainSpec::interval(a, b);
            } else if (type == "square") {
                rd.unknown_keys(*d, "domain.", {"type", "center", "half_width"});
                c.domain = DomainSpec::square({center.at(0), center.at(1)}, hw);
            } else if (type == "disc") {
                rd.unknown_keys(*d, "domain.", {"type", "center", "radius"});
                c.domain = DomainSpec::disc({center.at(0), center.at(1)}, radius);
            } else {
                rd.fail("domain.type: must be interval, square or disc, got \"" + type + "\"");
            }
        } catch (const std::exception& e) {
            rd.fail(std::string("domain: ") + e.what());
        }
    }
    if (const json* s = rd.object(doc, "solve", "")) {
        rd.unknown_keys(*s, "solve.",
                        {"p", "newton_tol", "max_iters", "max_halvings", "continuation", "max_step", "min_step"});
        rd.get(*s, "p", "solve.", c.solve.p);
        rd.get(*s, "newton_tol", "solve.", c.solve.newton_tol);
        rd.get(*s, "max_iters", "solve.", c.solve.max_iters);
        rd.get(*s, "max_halvings", "solve.", c.solve.max_halvings);
        rd.get(*s, "continuation", "solve.", c.solve.continuation);
        rd.get(*s, "max_step", "solve.", c.solve.max_step);
        rd.get(*s, "min_step", "solve.", c.solve.min_step);
    }
    if (const json* q = rd.object(doc, "quad", "")) {
        rd.unknown_keys(*q, "quad.", {"delta", "r_far", "tol", "max_subdivisions"});
        rd.get(*q, "delta", "quad.", c.quad.delta);
        rd.get(*q, "r_far", "quad.", c.quad.r_far);
        rd.get(*q, "tol", "quad.", c.quad.tol);
        rd.get(*q, "max_subdivisions", "quad.", c.quad.max_subdivisions);
    }
    if (const json* x = rd.object(doc, "extension", "")) {
        rd.unknown_keys(*x, "extension.", {"y_max", "nx", "ny", "grading", "calibrate", "far_field"});
        rd.get(*x, "y_max", "extension.", c.extension.y_max);
        rd.get(*x, "nx", "extension.", c.extension.nx);
        rd.get(*x, "ny", "extension.", c.extension.ny);
        rd.get(*x, "grading", "extension.", c.extension.grading);
        rd.get(*x, "calibrate", "extension.", c.extension.calibrate);
        std::string far = "monopole";
        rd.get(*x, "far_field", "extension.", far);
        if (far == "zero")
            c.extension.far_field = FarField::zero;
        else if (far != "monopole")
            rd.fail("extension.far_field: must be zero or monopole, got \"" + far + "\"");
    }

    // semantic checks, each naming the violated bound
    const bool order_ok = c.alpha > 0.0 && c.alpha < 2.0;
    if (!order_ok) rd.fail("alpha = " + detail::num(c.alpha) + ": order out of (0,2)");
    if (c.n != 1 && c.n != 2) rd.fail("n = " + std::to_string(c.n) + ": dimension must be 1 or 2");
    if (c.domain.dim() != c.n && (c.n == 1 || c.n == 2))
        rd.fail("domain: dimension " + std::to_string(c.domain.dim()) + " does not match n = " + std::to_string(c.n));
    if (!(c.solve.p > 1.0)) rd.fail("solve.p = " + detail::num(c.solve.p) + ": exponent must exceed 1");
    if (order_ok && (c.n == 1 || c.n == 2)) {
        const double pc = critical_exponent(c.n, c.alpha);
        if (!(c.solve.p < pc))
            rd.fail("solve.p = " + detail::num(c.solve.p) + ": supercritical, must be below " + detail::num(pc));
        for (double p : c.solve.continuation)
            if (!(p > 1.0 && p < pc))
                rd.fail("solve.continuation entry " + detail::num(p) + ": outside the subcritical window (1, " +
                        detail::num(pc) + ")");
    }
    for (std::size_t i = 1; i < c.solve.continuation.size(); ++i)
        if (!(c.solve.continuation[i] > c.solve.continuation[i - 1]))
            rd.fail("solve.continuation: schedule must be strictly increasing");
    if (!(c.solve.newton_tol > 0.0)) rd.fail("solve.newton_tol: must be positive");
    if (c.solve.max_iters < 1) rd.fail("solve.max_iters: must be at least 1");
    if (c.solve.max_halvings < 0) rd.fail("solve.max_halvings: must be nonnegative");
    if (!(c.solve.min_step > 0.0) || !(c.solve.max_step >= c.solve.min_step))
        rd.fail("solve.max_step/min_step: need 0 < min_step <= max_step");
    if (!(c.h > 0.0)) {
        rd.fail("h = " + detail::num(c.h) + ": grid spacing must be positive");
    } else {
        const double width = c.domain.shape == DomainSpec::Shape::interval ? c.domain.b - c.domain.a
                                                                           : 2.0 * c.domain.half_width;
        if (width / c.h < 4.0) rd.fail("h = " + detail::num(c.h) + ": degenerate mesh, fewer than 3 interior nodes");
    }
    if (!(c.quad.delta > 0.0) || !(c.quad.delta < c.quad.r_far)) rd.fail("quad: need 0 < delta < r_far");
    if (!(c.quad.tol > 0.0)) rd.fail("quad.tol: must be positive");
    if (c.quad.max_subdivisions < 1) rd.fail("quad.max_subdivisions: must be positive");
    if (!(c.extension.y_max > 0.0)) rd.fail("extension.y_max: must be positive");
    if (c.extension.ny < 16) rd.fail("extension.ny = " + std::to_string(c.extension.ny) + ": degenerate mesh, need ny >= 16");
    if (c.extension.nx < 1) rd.fail("extension.nx: must be positive");
    if (!(c.extension.grading >= 1.0)) rd.fail("extension.grading: must be at least 1");

    if (!errors.empty()) throw ConfigError(std::move(errors));
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

/// 17 significant digits, independent of the global locale.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError("not a number: \"" + std::string(s) + "\"");
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
    out += '\n';
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size()) throw InputError("table row width does not match the header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline Table parse_csv(std::string_view text) {
    Table t;
    auto split = [](std::string_view line) {
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return cells;
    };
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (first) {
            for (auto c : split(line)) t.header.emplace_back(c);
            first = false;
            continue;
        }
        if (line.empty()) continue;
        std::vector<double> row;
        for (auto c : split(line)) row.push_back(parse_double(c));
        if (row.size() != t.header.size()) throw InputError("csv row width does not match the header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Writes to a sibling temporary file, then renames over the target.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + path.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path.string());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void emit_csv(const Table& t, const std::filesystem::path& path) { write_atomic(path, to_csv(t)); }

inline Table read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

/// sequence.csv layout: k, p, m, lambda, d, ratio.
inline Table sequence_table(const BlowupSequence& seq) {
    Table t;
    t.header = {"k", "p", "m", "lambda", "d", "ratio"};
    for (std::size_t k = 0; k < seq.records.size(); ++k)
        t.rows.push_back({static_cast<double>(k), seq.records[k].p, seq.records[k].m, seq.lambdas[k], seq.records[k].d,
                          seq.ratios[k]});
    return t;
}

struct SequenceScalars {
    std::vector<double> p, m, lambdas, d, ratios;
};

inline SequenceScalars parse_sequence_table(const Table& t) {
    const std::vector<std::string> expect{"k", "p", "m", "lambda", "d", "ratio"};
    if (t.header != expect) throw InputError("not a sequence table: unexpected header");
    SequenceScalars s;
    for (const auto& row : t.rows) {
        s.p.push_back(row[1]);
        s.m.push_back(row[2]);
        s.lambdas.push_back(row[3]);
        s.d.push_back(row[4]);
        s.ratios.push_back(row[5]);
    }
    return s;
}

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotStyle {
    std::string title;
    std::string x_label = "x";
    std::string y_label = "y";
    bool log_x = false;
    bool log_y = false;
    int width = 640;
    int height = 480;
    bool markers = true;
    bool lines = true;
};

namespace detail {

inline std::string fixed(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

inline std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::vector<double> ticks(double lo, double hi, bool log) {
    std::vector<double> t;
    if (log) {
        for (double e = std::floor(lo); e <= std::ceil(hi) + 1e-9; e += 1.0) t.push_back(e);
        return t;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double step = raw / mag < 2.0 ? 2.0 * mag : (raw / mag < 5.0 ? 5.0 * mag : 10.0 * mag);
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(v);
    return t;
}

inline std::string tick_label(double v, bool log) {
    char buf[32];
    if (log) {
        std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(v)));
    } else {
        const auto res = std::to_chars(buf, buf + sizeof buf, std::abs(v) < 1e-12 ? 0.0 : v, std::chars_format::general, 4);
        *res.ptr = '\0';
    }
    return buf;
}

}  // namespace detail

/// Self-contained SVG line/marker plot. Identical input gives identical bytes.
inline std::string render_svg(const std::vector<Series>& series, const PlotStyle& style) {
    if (series.empty()) throw InputError("plot needs at least one series");
    std::vector<std::string> bad;
    for (std::size_t s = 0; s < series.size(); ++s) {
        if (series[s].x.size() != series[s].y.size()) throw InputError("series " + std::to_string(s) + ": x and y lengths differ");
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            const double x = series[s].x[i], y = series[s].y[i];
            const bool ok = std::isfinite(x) && std::isfinite(y) && (!style.log_x || x > 0.0) && (!style.log_y || y > 0.0);
            if (!ok) bad.push_back(std::to_string(s) + ":" + std::to_string(i));
        }
    }
    if (!bad.empty()) {
        std::string msg = "non-finite or non-positive (log axis) values at series:index";
        for (const auto& b : bad) msg += " " + b;
        throw InputError(msg);
    }
    auto tx = [&](double v) { return style.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return style.log_y ? std::log10(v) : v; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 - x0 <= 0.0) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 <= 0.0) y0 -= 0.5, y1 += 0.5;

    const double left = 70, right = 20, top = 40, bottom = 50;
    const double w = style.width, h = style.height;
    const double pw = w - left - right, ph = h - top - bottom;
    auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return top + ph - (v - y0) / (y1 - y0) * ph; };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    using detail::fixed;
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.width) + "\" height=\"" +
           std::to_string(style.height) + "\" viewBox=\"0 0 " + std::to_string(style.width) + " " +
           std::to_string(style.height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : detail::ticks(x0, x1, style.log_x)) {
        if (t < x0 - 1e-12 || t > x1 + 1e-12) continue;
        out += "<line x1=\"" + fixed(px(t)) + "\" y1=\"" + fixed(top + ph) + "\" x2=\"" + fixed(px(t)) + "\" y2=\"" +
               fixed(top + ph + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fixed(px(t)) + "\" y=\"" + fixed(top + ph + 18) +
               "\" font-size=\"11\" text-anchor=\"middle\">" + detail::tick_label(t, style.log_x) + "</text>\n";
    }
    for (double t : detail::ticks(y0, y1, style.log_y)) {
        if (t < y0 - 1e-12 || t > y1 + 1e-12) continue;
        out += "<line x1=\"" + fixed(left - 5) + "\" y1=\"" + fixed(py(t)) + "\" x2=\"" + fixed(left) + "\" y2=\"" +
               fixed(py(t)) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(py(t) + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">" + detail::tick_label(t, style.log_y) + "</text>\n";
    }
    out += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(h - 12) + "\" font-size=\"13\" text-anchor=\"middle\">" +
           detail::escape_xml(style.x_label) + "</text>\n";
    out += "<text x=\"16\" y=\"" + fixed(top + ph / 2) + "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fixed(top + ph / 2) + ")\">" + detail::escape_xml(style.y_label) + "</text>\n";
    if (!style.title.empty())
        out += "<text x=\"" + fixed(w / 2) + "\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">" +
               detail::escape_xml(style.title) + "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = colors[s % 6];
        const auto& sr = series[s];
        if (style.lines && sr.x.size() > 1) {
            out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" points=\"";
            for (std::size_t i = 0; i < sr.x.size(); ++i)
                out += (i ? " " : "") + fixed(px(tx(sr.x[i]))) + "," + fixed(py(ty(sr.y[i])));
            out += "\"/>\n";
        }
        if (style.markers || sr.x.size() == 1)
            for (std::size_t i = 0; i < sr.x.size(); ++i)
                out += "<circle cx=\"" + fixed(px(tx(sr.x[i]))) + "\" cy=\"" + fixed(py(ty(sr.y[i]))) +
                       "\" r=\"3\" fill=\"" + color + "\"/>\n";
        if (!sr.label.empty())
            out += "<text x=\"" + fixed(left + 10) + "\" y=\"" + fixed(top + 16 + 14.0 * static_cast<double>(s)) +
                   "\" font-size=\"11\" fill=\"" + color + "\">" + detail::escape_xml(sr.label) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

inline void emit_svg_plot(const std::vector<Series>& series, const std::filesystem::path& path,
                          const PlotStyle& style = {}) {
    write_atomic(path, render_svg(series, style));
}

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunManifest {
    std::vector<std::string> command_line;  ///< arguments after the program name
    json config;
    std::string parameter_hash;  ///< FNV-1a of the config dump
    std::string started;
    std::string finished;
    std::vector<std::string> artifacts;  ///< paths relative to the run directory
    std::string library_version = version;
};

inline json to_json(const RunManifest& m) {
    return json{{"command_line", m.command_line}, {"config", m.config},     {"parameter_hash", m.parameter_hash},
                {"started", m.started},           {"finished", m.finished}, {"artifacts", m.artifacts},
                {"library_version", m.library_version}};
}

inline RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    try {
        m.command_line = j.at("command_line").get<std::vector<std::string>>();
        m.config = j.at("config");
        m.parameter_hash = j.at("parameter_hash").get<std::string>();
        m.started = j.value("started", "");
        m.finished = j.value("finished", "");
        m.artifacts = j.value("artifacts", std::vector<std::string>{});
        m.library_version = j.value("library_version", "");
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed manifest: ") + e.what());
    }
    if (fnv1a_hex(m.config.dump()) != m.parameter_hash) throw InputError("manifest parameter hash does not match its config");
    return m;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    write_atomic(path, to_json(m).dump(2) + "\n");
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return manifest_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
        throw InputError("manifest is not valid JSON: " + std::string(e.what()));
    }
}

}  // namespace fraclap::io
