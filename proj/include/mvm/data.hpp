#pragma once

// Text formats.
//
// Dataset (UTF-8, '\n' terminated, '#' starts a comment):
//
//     @schema I1 I2 ... Im
//     <label> <view>:<index>:<value> ...
//
// view and index are 1-based. Explicit zeros are dropped on parse, and the
// writer emits entries sorted by (view, index) with shortest round-trip
// decimals, so write(parse(write(d))) == write(d) byte for byte.
//
// Model file:
//
//     mvm-model 1
//     family mvm|linear|mvfm
//     schema I1 ... Im
//     k <k>                      (mvm, mvfm)
//     augment 0|1                (mvm)
//     w0 <value>                 (linear, mvfm)
//     view <v>                   then per view:
//       mvm:    I_v+1 lines of k values (last line = bias factor)
//       linear: one line of I_v values
//       mvfm:   one line of I_v first-order values, then I_v lines of k values

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "mvm/baselines.hpp"
#include "mvm/dataset.hpp"
#include "mvm/errors.hpp"
#include "mvm/model.hpp"
#include "mvm/random.hpp"
#include "mvm/schema.hpp"

namespace mvm {

/// Shortest decimal that parses back to exactly `x`.
inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) {
        throw Error("failed to format number");
    }
    return std::string(buf, ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        if (i >= s.size()) break;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool parse_real(std::string_view s, double& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_count(std::string_view s, std::size_t& out) {
    if (s.empty()) return false;
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return false;
    out = static_cast<std::size_t>(v);
    return true;
}

/// Splits text into lines, keeping 1-based numbering.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        const auto nl = text_.find('\n', pos_);
        const auto end = nl == std::string_view::npos ? text_.size() : nl;
        line = text_.substr(pos_, end - pos_);
        pos_ = nl == std::string_view::npos ? text_.size() : nl + 1;
        ++line_no_;
        return true;
    }

    [[nodiscard]] std::size_t line_no() const noexcept { return line_no_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

}  // namespace detail

inline ViewSchema parse_schema_dims(std::string_view text) {
    std::vector<std::size_t> dims;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto tok = detail::trim(rest.substr(0, comma));
        std::size_t d = 0;
        if (!detail::parse_count(tok, d) || d == 0) {
            throw SchemaError("invalid view dimension '" + std::string(tok) + "'");
        }
        dims.push_back(d);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return ViewSchema(std::move(dims));
}

inline Dataset parse_dataset(std::string_view text) {
    detail::LineReader reader(text);
    std::string_view raw;
    std::optional<Dataset> data;
    while (reader.next(raw)) {
        const std::size_t ln = reader.line_no();
        const auto hash = raw.find('#');
        const auto line = detail::trim(raw.substr(0, hash));
        if (line.empty()) continue;
        const auto tokens = detail::split_ws(line);

        if (!data) {
            if (tokens.front() != "@schema") {
                throw ParseError(ln, "missing '@schema' header");
            }
            if (tokens.size() < 2) {
                throw ParseError(ln, "schema header lists no views");
            }
            std::vector<std::size_t> dims;
            for (std::size_t t = 1; t < tokens.size(); ++t) {
                std::size_t d = 0;
                if (!detail::parse_count(tokens[t], d) || d == 0) {
                    throw ParseError(ln, "invalid view dimension '" + std::string(tokens[t]) + "'");
                }
                dims.push_back(d);
            }
            data.emplace(ViewSchema(std::move(dims)));
            continue;
        }

        const ViewSchema& schema = data->schema();
        MultiViewInstance x;
        if (!detail::parse_real(tokens.front(), x.label)) {
            throw ParseError(ln, "malformed label '" + std::string(tokens.front()) + "'");
        }
        std::vector<std::vector<SparseViewVector::Entry>> entries(schema.num_views());
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            const auto tok = tokens[t];
            const auto c1 = tok.find(':');
            const auto c2 = c1 == std::string_view::npos ? c1 : tok.find(':', c1 + 1);
            if (c2 == std::string_view::npos) {
                throw ParseError(ln, "expected view:index:value, got '" + std::string(tok) + "'");
            }
            std::size_t view = 0, index = 0;
            double value = 0.0;
            if (!detail::parse_count(tok.substr(0, c1), view) ||
                !detail::parse_count(tok.substr(c1 + 1, c2 - c1 - 1), index)) {
                throw ParseError(ln, "malformed view or index in '" + std::string(tok) + "'");
            }
            if (!detail::parse_real(tok.substr(c2 + 1), value)) {
                throw ParseError(ln, "malformed value in '" + std::string(tok) + "'");
            }
            if (view < 1 || view > schema.num_views()) {
                throw ParseError(ln, "view " + std::to_string(view) + " out of range 1.." +
                                         std::to_string(schema.num_views()));
            }
            if (index < 1 || index > schema.dim(view - 1)) {
                throw ParseError(ln, "index " + std::to_string(index) + " out of range 1.." +
                                         std::to_string(schema.dim(view - 1)) + " in view " +
                                         std::to_string(view));
            }
            auto& ve = entries[view - 1];
            for (const auto& e : ve) {
                if (e.index == index - 1) {
                    throw ParseError(ln, "duplicate feature " + std::to_string(view) + ":" +
                                             std::to_string(index));
                }
            }
            ve.push_back({index - 1, value});
        }
        for (auto& ve : entries) {
            x.views.push_back(SparseViewVector::from_entries(std::move(ve)));
        }
        data->push_back(std::move(x));
    }
    if (!data) {
        throw ParseError(reader.line_no() + 1, "missing '@schema' header");
    }
    return std::move(*data);
}

inline std::string write_schema_header(const ViewSchema& schema) {
    std::string out = "@schema";
    for (std::size_t d : schema.dims()) {
        out += ' ';
        out += std::to_string(d);
    }
    out += '\n';
    return out;
}

inline std::string write_instance(const MultiViewInstance& x) {
    std::string out = format_double(x.label);
    for (std::size_t v = 0; v < x.views.size(); ++v) {
        for (const auto& e : x.views[v].entries()) {
            out += ' ';
            out += std::to_string(v + 1);
            out += ':';
            out += std::to_string(e.index + 1);
            out += ':';
            out += format_double(e.value);
        }
    }
    out += '\n';
    return out;
}

inline std::string write_dataset(const Dataset& data) {
    std::string out = write_schema_header(data.schema());
    for (const auto& x : data.instances()) {
        out += write_instance(x);
    }
    return out;
}

struct SynthResult {
    Dataset data;
    /// The labelling teacher. Its last factor only carries a constant
    /// offset (minus the median raw score) through the bias rows, so
    /// rank() == k_teacher + 1 and sign(predict_fast(teacher, x)) is the
    /// noise-free label.
    MvmModel teacher;
};

/// Planted full-order MVM problem: teacher factors ~ N(0, 1), features kept
/// with probability `density` and valued ~ N(0, 1), labels
/// sign(score - median score) flipped with probability `noise`.
inline SynthResult synth_generate(const ViewSchema& schema, std::size_t k_teacher, std::size_t n,
                                  double density, double noise, std::uint64_t seed) {
    if (!(density > 0.0 && density <= 1.0)) {
        throw ConfigError("density must lie in (0, 1]");
    }
    if (!(noise >= 0.0 && noise < 0.5)) {
        throw ConfigError("noise must lie in [0, 0.5)");
    }
    if (k_teacher == 0) {
        throw ConfigError("teacher k must be at least 1");
    }

    Rng rng = derive_rng(seed, rng_stream::synth);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    MvmModel teacher(schema, k_teacher + 1, true);
    for (std::size_t v = 0; v < schema.num_views(); ++v) {
        Matrix& a = teacher.factor(v);
        for (std::size_t r = 0; r < a.rows(); ++r) {
            for (std::size_t f = 0; f < k_teacher; ++f) {
                a(r, f) = normal(rng);
            }
        }
    }

    Dataset data(schema);
    std::vector<MultiViewInstance> instances;
    instances.reserve(n);
    std::vector<double> scores;
    scores.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        MultiViewInstance x;
        for (std::size_t v = 0; v < schema.num_views(); ++v) {
            std::vector<SparseViewVector::Entry> entries;
            for (std::size_t j = 0; j < schema.dim(v); ++j) {
                if (unit(rng) < density) {
                    double value = 0.0;
                    while (value == 0.0) value = normal(rng);
                    entries.push_back({j, value});
                }
            }
            x.views.push_back(SparseViewVector::from_entries(std::move(entries)));
        }
        scores.push_back(predict_fast(teacher, x));
        instances.push_back(std::move(x));
    }

    double median = 0.0;
    if (n > 0) {
        std::vector<double> sorted = scores;
        std::sort(sorted.begin(), sorted.end());
        median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
    for (std::size_t v = 0; v < schema.num_views(); ++v) {
        teacher.factor(v)(teacher.bias_row(v), k_teacher) = v == 0 ? -median : 1.0;
    }

    for (auto& x : instances) {
        const double score = predict_fast(teacher, x);
        double label = score >= 0.0 ? 1.0 : -1.0;
        if (unit(rng) < noise) label = -label;
        x.label = label;
        data.push_back(std::move(x));
    }
    return {std::move(data), std::move(teacher)};
}

/// Seeded random split; the first round(fraction * n) permuted instances
/// form the first part.
inline std::pair<Dataset, Dataset> split(const Dataset& data, double fraction,
                                         std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("split fraction must lie in (0, 1)");
    }
    Rng rng = derive_rng(seed, rng_stream::split);
    const auto order = permutation(data.size(), rng);
    const auto cut = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data.size())));
    Dataset first(data.schema()), second(data.schema());
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < cut ? first : second).push_back(data[order[i]]);
    }
    return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------
// Model persistence

using AnyModel = std::variant<MvmModel, LinearModel, MvfmModel>;

inline constexpr std::string_view kModelMagic = "mvm-model";
inline constexpr int kModelFormatVersion = 1;

inline std::string_view family_name(const AnyModel& model) {
    switch (model.index()) {
        case 0: return "mvm";
        case 1: return "linear";
        default: return "mvfm";
    }
}

inline const ViewSchema& model_schema(const AnyModel& model) {
    return std::visit([](const auto& m) -> const ViewSchema& { return m.schema(); }, model);
}

inline double predict_any(const AnyModel& model, const MultiViewInstance& x) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MvmModel>) {
                return predict_fast(m, x);
            } else if constexpr (std::is_same_v<T, LinearModel>) {
                return linear_predict(m, x);
            } else {
                return mvfm_predict(m, x);
            }
        },
        model);
}

namespace detail {

inline void append_row(std::string& out, std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ' ';
        out += format_double(values[i]);
    }
    out += '\n';
}

}  // namespace detail

inline std::string serialize_model(const AnyModel& any) {
    std::string out = std::string(kModelMagic) + " " + std::to_string(kModelFormatVersion) + "\n";
    out += "family " + std::string(family_name(any)) + "\n";
    const ViewSchema& schema = model_schema(any);
    out += "schema";
    for (std::size_t d : schema.dims()) out += " " + std::to_string(d);
    out += "\n";

    if (const auto* m = std::get_if<MvmModel>(&any)) {
        out += "k " + std::to_string(m->rank()) + "\n";
        out += std::string("augment ") + (m->augment() ? "1" : "0") + "\n";
        for (std::size_t v = 0; v < schema.num_views(); ++v) {
            out += "view " + std::to_string(v + 1) + "\n";
            for (std::size_t r = 0; r < m->factor(v).rows(); ++r) {
                detail::append_row(out, m->factor(v).row(r));
            }
        }
    } else if (const auto* l = std::get_if<LinearModel>(&any)) {
        out += "w0 " + format_double(l->w0()) + "\n";
        for (std::size_t v = 0; v < schema.num_views(); ++v) {
            out += "view " + std::to_string(v + 1) + "\n";
            detail::append_row(out, l->weights(v));
        }
    } else {
        const auto& fm = std::get<MvfmModel>(any);
        out += "k " + std::to_string(fm.rank()) + "\n";
        out += "w0 " + format_double(fm.w0()) + "\n";
        for (std::size_t v = 0; v < schema.num_views(); ++v) {
            out += "view " + std::to_string(v + 1) + "\n";
            detail::append_row(out, fm.first_order(v));
            for (std::size_t r = 0; r < fm.latent(v).rows(); ++r) {
                detail::append_row(out, fm.latent(v).row(r));
            }
        }
    }
    return out;
}

namespace detail {

class ModelReader {
public:
    explicit ModelReader(std::string_view text) : reader_(text) {}

    std::vector<std::string_view> tokens(std::string_view expect_what) {
        std::string_view line;
        if (!reader_.next(line)) {
            throw FormatError("model file truncated: expected " + std::string(expect_what) +
                              " at line " + std::to_string(reader_.line_no() + 1));
        }
        return split_ws(line);
    }

    /// Line "<key> <value...>"; returns the values.
    std::vector<std::string_view> keyed(std::string_view key) {
        auto t = tokens(std::string("'") + std::string(key) + "'");
        if (t.empty() || t.front() != key) {
            fail("expected '" + std::string(key) + "'");
        }
        t.erase(t.begin());
        return t;
    }

    std::size_t keyed_count(std::string_view key) {
        const auto t = keyed(key);
        std::size_t n = 0;
        if (t.size() != 1 || !parse_count(t[0], n)) fail("malformed '" + std::string(key) + "'");
        return n;
    }

    double keyed_real(std::string_view key) {
        const auto t = keyed(key);
        double x = 0.0;
        if (t.size() != 1 || !parse_real(t[0], x)) fail("malformed or non-finite '" + std::string(key) + "'");
        return x;
    }

    void row(std::span<double> out, std::string_view what) {
        const auto t = tokens(what);
        if (t.size() != out.size()) {
            fail("shape mismatch in " + std::string(what) + ": expected " +
                 std::to_string(out.size()) + " values, found " + std::to_string(t.size()));
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!parse_real(t[i], out[i])) fail("malformed or non-finite value in " + std::string(what));
        }
    }

    void view_header(std::size_t v) {
        if (keyed_count("view") != v + 1) fail("views out of order");
    }

    void expect_end() {
        std::string_view line;
        while (reader_.next(line)) {
            if (!trim(line).empty()) fail("trailing content after payload");
        }
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError("model file line " + std::to_string(reader_.line_no()) + ": " + what);
    }

private:
    LineReader reader_;
};

}  // namespace detail

inline AnyModel deserialize_model(std::string_view text) {
    detail::ModelReader in(text);
    {
        std::vector<std::string_view> t;
        try {
            t = in.tokens("header");
        } catch (const FormatError&) {
            throw VersionError("not a model file: missing 'mvm-model' header");
        }
        if (t.size() != 2 || t[0] != kModelMagic) {
            throw VersionError("not a model file: missing 'mvm-model' header");
        }
        if (t[1] != std::to_string(kModelFormatVersion)) {
            throw VersionError("unsupported model format version '" + std::string(t[1]) + "'");
        }
    }
    const auto family = in.keyed("family");
    if (family.size() != 1) in.fail("malformed family line");

    std::vector<std::size_t> dims;
    for (auto tok : in.keyed("schema")) {
        std::size_t d = 0;
        if (!detail::parse_count(tok, d) || d == 0) in.fail("invalid schema dimension");
        dims.push_back(d);
    }
    if (dims.empty()) in.fail("schema lists no views");
    ViewSchema schema(std::move(dims));

    if (family[0] == "mvm") {
        const std::size_t k = in.keyed_count("k");
        if (k == 0) in.fail("k must be positive");
        const std::size_t aug = in.keyed_count("augment");
        if (aug > 1) in.fail("augment must be 0 or 1");
        MvmModel model(schema, k, aug == 1);
        for (std::size_t v = 0; v < schema.num_views(); ++v) {
            in.view_header(v);
            for (std::size_t r = 0; r < model.factor(v).rows(); ++r) {
                in.row(model.factor(v).row(r), "factor row");
            }
            if (!model.augment()) {
                for (double b : model.factor(v).row(model.bias_row(v))) {
                    if (b != 0.0) in.fail("bias row must be zero when augment is 0");
                }
            }
        }
        in.expect_end();
        return model;
    }
    if (family[0] == "linear") {
        LinearModel model(schema);
        model.w0() = in.keyed_real("w0");
        for (std::size_t v = 0; v < schema.num_views(); ++v) {
            in.view_header(v);
            in.row(model.weights(v), "weight row");
        }
        in.expect_end();
        return model;
    }
    if (family[0] == "mvfm") {
        const std::size_t k = in.keyed_count("k");
        if (k == 0) in.fail("k must be positive");
        MvfmModel model(schema, k);
        model.w0() = in.keyed_real("w0");
        for (std::size_t v = 0; v < schema.num_views(); ++v) {
            in.view_header(v);
            in.row(model.first_order(v), "first-order row");
            for (std::size_t r = 0; r < model.latent(v).rows(); ++r) {
                in.row(model.latent(v).row(r), "latent row");
            }
        }
        in.expect_end();
        return model;
    }
    in.fail("unknown model family '" + std::string(family[0]) + "'");
}

}  // namespace mvm
