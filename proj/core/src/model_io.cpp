#include "dfprune/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "dfprune/errors.hpp"

namespace dfprune {

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific, 16);
    return std::string(buf, res.ptr);
}

bool parse_double(std::string_view token, double& out) {
    if (token.empty()) return false;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

namespace {

bool parse_size(std::string_view token, std::size_t& out) {
    if (token.empty()) return false;
    auto res = std::from_chars(token.data(), token.data() + token.size(), out);
    return res.ec == std::errc() && res.ptr == token.data() + token.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t p = line.find(sep, start);
        out.push_back(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t k = 0;
    while (k < line.size()) {
        while (k < line.size() && (line[k] == ' ' || line[k] == '\t' || line[k] == '\r')) ++k;
        const std::size_t start = k;
        while (k < line.size() && line[k] != ' ' && line[k] != '\t' && line[k] != '\r') ++k;
        if (k > start) out.push_back(line.substr(start, k - start));
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Reads significant lines (skipping blanks and '#' comments) with numbering.
class LineReader {
public:
    LineReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

    bool next(std::vector<std::string_view>& toks) {
        while (std::getline(is_, line_)) {
            ++number_;
            toks = tokens(line_);
            if (toks.empty() || toks.front().front() == '#') continue;
            return true;
        }
        return false;
    }

    std::vector<std::string_view> expect(std::string_view what) {
        std::vector<std::string_view> toks;
        if (!next(toks)) fail("unexpected end of file, expected " + std::string(what));
        return toks;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, number_, what); }

    std::size_t number() const noexcept { return number_; }

private:
    std::istream& is_;
    std::string source_;
    std::string line_;
    std::size_t number_ = 0;
};

std::size_t expect_keyword_size(LineReader& in, std::string_view key) {
    auto t = in.expect(key);
    std::size_t v = 0;
    if (t.size() != 2 || t[0] != key || !parse_size(t[1], v)) {
        in.fail("expected '" + std::string(key) + " <count>'");
    }
    return v;
}

void read_values(LineReader& in, std::string_view tag, std::size_t count, std::span<double> out) {
    auto t = in.expect(std::string(tag) + " row");
    if (t.empty() || t[0] != tag) in.fail("expected a '" + std::string(tag) + "' row");
    if (t.size() - 1 != count) {
        in.fail("'" + std::string(tag) + "' row has " + std::to_string(t.size() - 1) + " values, expected " +
                std::to_string(count));
    }
    for (std::size_t k = 0; k < count; ++k) {
        double v = 0.0;
        if (!parse_double(t[k + 1], v) || !std::isfinite(v)) {
            in.fail("field " + std::to_string(k + 1) + " of '" + std::string(tag) + "' row is not a finite number: '" +
                    std::string(t[k + 1]) + "'");
        }
        out[k] = v;
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
    return is;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

void write_model(std::ostream& os, const Network& net) {
    os << "dfprune-model " << std::to_string(kModelFormatVersion) << '\n';
    os << "input_dim " << std::to_string(net.input_dim()) << '\n';
    os << "layers " << std::to_string(net.layer_count()) << '\n';
    for (const FcLayer& l : net.layers()) {
        os << "layer " << to_string(l.activation) << ' ' << std::to_string(l.n_in()) << ' ' << std::to_string(l.n_out()) << '\n';
        for (std::size_t r = 0; r < l.n_out(); ++r) {
            os << 'w';
            for (double v : l.weights.row(r)) os << ' ' << format_double(v);
            os << '\n';
        }
        os << 'b';
        for (double v : l.bias) os << ' ' << format_double(v);
        os << '\n';
    }
    os << "end\n";
}

Network read_model(std::istream& is, const std::string& source) {
    LineReader in(is, source);
    auto head = in.expect("model header");
    if (head.size() != 2 || head[0] != "dfprune-model") in.fail("not a dfprune model file (missing 'dfprune-model' header)");
    std::size_t version = 0;
    if (!parse_size(head[1], version)) in.fail("malformed format version '" + std::string(head[1]) + "'");
    if (version != static_cast<std::size_t>(kModelFormatVersion)) {
        throw VersionError(source + ": model format version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(kModelFormatVersion) + ")");
    }

    const std::size_t input_dim = expect_keyword_size(in, "input_dim");
    if (input_dim == 0) in.fail("input_dim must be positive");
    const std::size_t n_layers = expect_keyword_size(in, "layers");
    if (n_layers < 2) in.fail("a model needs at least two layers");

    std::vector<FcLayer> layers;
    std::size_t fan_in = input_dim;
    for (std::size_t k = 0; k < n_layers; ++k) {
        auto t = in.expect("layer header");
        std::size_t n_in = 0;
        std::size_t n_out = 0;
        if (t.size() != 4 || t[0] != "layer" || !parse_size(t[2], n_in) || !parse_size(t[3], n_out)) {
            in.fail("expected 'layer <activation> <n_in> <n_out>'");
        }
        const auto act = parse_activation(t[1]);
        if (!act) in.fail("unknown activation '" + std::string(t[1]) + "'");
        if (n_in != fan_in) {
            in.fail("layer " + std::to_string(k) + " declares n_in " + std::to_string(n_in) + " but receives " +
                    std::to_string(fan_in) + " inputs");
        }
        if (n_out == 0) in.fail("layer " + std::to_string(k) + " has no neurons");
        if (*act == Activation::Identity && k + 1 != n_layers) in.fail("identity activation is only allowed on the output layer");

        FcLayer l{Matrix(n_out, n_in), std::vector<double>(n_out), *act};
        for (std::size_t r = 0; r < n_out; ++r) read_values(in, "w", n_in, l.weights.row(r));
        read_values(in, "b", n_out, l.bias);
        layers.push_back(std::move(l));
        fan_in = n_out;
    }
    auto tail = in.expect("'end'");
    if (tail.size() != 1 || tail[0] != "end") in.fail("expected 'end' after the last layer");
    return Network(input_dim, std::move(layers));
}

void save_model(const Network& net, const std::filesystem::path& path) {
    auto os = open_out(path);
    write_model(os, net);
    finish(os, path);
}

Network load_model(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_model(is, path.string());
}

void write_trace(std::ostream& os, const PruneTrace& trace) {
    os << kTraceHeader << '\n';
    for (const PruneStep& s : trace.steps) {
        os << std::to_string(s.step_number) << ',';
        if (s.kept) os << std::to_string(*s.kept);
        os << ',' << std::to_string(s.removed) << ',' << format_double(s.saliency) << ',';
        if (s.test_error) os << format_double(*s.test_error);
        os << '\n';
    }
}

PruneTrace read_trace(std::istream& is, const std::string& source) {
    std::string line;
    std::size_t number = 0;
    if (!std::getline(is, line)) throw ParseError(source, 0, "empty trace file");
    ++number;
    if (trim(line) != kTraceHeader) {
        throw ParseError(source, number, "trace header must be exactly '" + std::string(kTraceHeader) + "'");
    }
    PruneTrace trace;
    while (std::getline(is, line)) {
        ++number;
        const std::string_view row = trim(line);
        if (row.empty()) continue;
        const auto f = split(row, ',');
        if (f.size() != 5) {
            throw ParseError(source, number, "expected 5 fields, found " + std::to_string(f.size()));
        }
        PruneStep s;
        std::size_t kept = 0;
        if (!parse_size(f[0], s.step_number)) throw ParseError(source, number, "field 'step' is not an integer");
        if (!f[1].empty()) {
            if (!parse_size(f[1], kept)) throw ParseError(source, number, "field 'kept' is not an integer");
            s.kept = kept;
        }
        if (!parse_size(f[2], s.removed)) throw ParseError(source, number, "field 'removed' is not an integer");
        if (!parse_double(f[3], s.saliency)) throw ParseError(source, number, "field 'saliency' is not a number");
        if (!f[4].empty()) {
            double e = 0.0;
            if (!parse_double(f[4], e)) throw ParseError(source, number, "field 'test_error' is not a number");
            s.test_error = e;
        }
        if (!trace.steps.empty() && s.step_number <= trace.steps.back().step_number) {
            throw ParseError(source, number, "step numbers must be strictly increasing");
        }
        trace.steps.push_back(s);
    }
    trace.original_size = trace.steps.size() + 1;
    return trace;
}

void export_trace(const PruneTrace& trace, const std::filesystem::path& path) {
    auto os = open_out(path);
    write_trace(os, trace);
    finish(os, path);
}

PruneTrace import_trace(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_trace(is, path.string());
}

namespace {

template <typename Range, typename Fmt>
std::string join(const Range& r, Fmt fmt) {
    std::string out;
    bool first = true;
    for (const auto& v : r) {
        if (!first) out += ',';
        out += fmt(v);
        first = false;
    }
    return out;
}

}  // namespace

void write_report(std::ostream& os, const CutoffReport& r) {
    auto num = [](double v) { return format_double(v); };
    auto idx = [](std::size_t v) { return std::to_string(v); };
    os << "method = " << to_string(r.method) << '\n';
    os << "predicted_count = " << std::to_string(r.predicted_count) << '\n';
    os << "cutoff_saliency = " << format_double(r.cutoff_saliency) << '\n';
    os << "fraction = " << format_double(r.fraction) << '\n';
    os << "trace_length = " << std::to_string(r.trace_length) << '\n';
    if (r.method == CutoffMethod::DataFree) {
        os << "histogram.bin_edges = " << join(r.histogram.bin_edges, num) << '\n';
        os << "histogram.counts = " << join(r.histogram.counts, idx) << '\n';
        os << "histogram.mode_bin = " << std::to_string(r.histogram.mode_bin) << '\n';
        os << "histogram.degenerate = " << (r.histogram.degenerate ? "true" : "false") << '\n';
    } else {
        os << "baseline_error = " << format_double(r.baseline_error) << '\n';
        os << "max_error_increase = " << format_double(r.max_error_increase) << '\n';
        os << "budget = " << std::to_string(r.budget) << '\n';
        os << "samples.step = " << join(r.samples, [](const ErrorSample& s) { return std::to_string(s.step); }) << '\n';
        os << "samples.error = " << join(r.samples, [](const ErrorSample& s) { return format_double(s.error); })
           << '\n';
    }
    for (const auto& w : r.warnings) os << "warning = " << w << '\n';
}

void export_report(const CutoffReport& report, const std::filesystem::path& path) {
    auto os = open_out(path);
    write_report(os, report);
    finish(os, path);
}

std::string summarize(const CutoffReport& r) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << "cutoff (" << to_string(r.method) << "): remove " << r.predicted_count << " of " << r.trace_length
       << " prunable neurons\n";
    os << "  cutoff saliency " << r.cutoff_saliency << '\n';
    if (r.method == CutoffMethod::DataFree) {
        os << "  fraction " << r.fraction << ", histogram mode bin " << r.histogram.mode_bin << " of "
           << r.histogram.counts.size() << " (" << r.histogram.counts.at(r.histogram.mode_bin) << " steps)\n";
    } else {
        os << "  baseline error " << r.baseline_error << ", allowed increase " << r.max_error_increase << ", "
           << r.samples.size() << "/" << r.budget << " oracle calls\n";
    }
    for (const auto& w : r.warnings) os << "  warning: " << w << '\n';
    return os.str();
}

void export_curve(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
    auto os = open_out(path);
    os << "step,error\n";
    for (const auto& p : curve) os << std::to_string(p.step) << ',' << format_double(p.error) << '\n';
    finish(os, path);
}

Dataset read_dataset_csv(std::istream& is, bool skip_header, const std::string& source) {
    std::string line;
    std::size_t number = 0;
    if (skip_header) {
        if (!std::getline(is, line)) throw ParseError(source, 0, "empty dataset file");
        ++number;
    }
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t dim = 0;
    while (std::getline(is, line)) {
        ++number;
        const std::string_view row = trim(line);
        if (row.empty()) continue;
        const auto f = split(row, ',');
        if (f.size() < 2) throw ParseError(source, number, "need at least one feature and a label");
        if (labels.empty()) {
            dim = f.size() - 1;
        } else if (f.size() - 1 != dim) {
            throw ParseError(source, number, "row has " + std::to_string(f.size() - 1) + " features, expected " +
                                                 std::to_string(dim));
        }
        for (std::size_t k = 0; k < dim; ++k) {
            double v = 0.0;
            if (!parse_double(trim(f[k]), v) || !std::isfinite(v)) {
                throw ParseError(source, number, "feature " + std::to_string(k + 1) + " is not a finite number");
            }
            values.push_back(v);
        }
        std::size_t y = 0;
        if (!parse_size(trim(f[dim]), y) || y > 1'000'000) {
            throw ParseError(source, number, "label is not a non-negative integer");
        }
        labels.push_back(static_cast<int>(y));
    }
    if (labels.empty()) throw ParseError(source, number, "dataset has no samples");

    Dataset ds;
    ds.features = Matrix(labels.size(), dim);
    std::copy(values.begin(), values.end(), ds.features.data().begin());
    ds.labels = std::move(labels);
    ds.splits.assign(ds.labels.size(), Split::Train);
    ds.num_classes = std::max(2, *std::max_element(ds.labels.begin(), ds.labels.end()) + 1);
    return ds;
}

Dataset load_dataset_csv(const std::filesystem::path& path, bool skip_header) {
    auto is = open_in(path);
    return read_dataset_csv(is, skip_header, path.string());
}

}  // namespace dfprune
