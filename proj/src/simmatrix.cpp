#include "numaff/simmatrix.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <set>
#include <thread>

#include "numaff/image.hpp"

namespace numaff {

SiameseScorer::SiameseScorer(SiameseModel model) : model_(std::move(model)) { validate_model(model_); }

void SiameseScorer::prepare(std::span<const Dataset> datasets) {
    cache_.clear();
    for (const auto& ds : datasets)
        for (const auto& cls : ds.classes)
            for (const auto& s : cls) {
                const std::size_t n = model_.arch().input_size;
                if (s.image.width != n || s.image.height != n)
                    throw Error(Errc::shape_mismatch, "dataset '" + ds.name + "' image " + s.id +
                                                          " is not " + std::to_string(n) + "x" +
                                                          std::to_string(n));
                cache_.emplace(&s, encode(model_, image_tensor<float>(s.image)));
            }
}

double SiameseScorer::score(const Sample& a, const Sample& b) const {
    const auto ia = cache_.find(&a);
    const auto ib = cache_.find(&b);
    if (ia != cache_.end() && ib != cache_.end()) return merge_head(model_, ia->second, ib->second);
    return pair_similarity(model_, a.image, b.image);
}

ConstantScorer::ConstantScorer(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0))
        throw Error(Errc::out_of_range, "constant similarity must lie in [0, 1]");
}

double dataset_pair_similarity(const PairScorer& scorer, const Dataset& a, const Dataset& b,
                               const SamplingConfig& config, Rng& pair_rng) {
    if (config.samples_per_digit == 0)
        throw Error(Errc::invalid_argument, "samples per digit (N) must be at least 1");
    require_all_classes(a);
    require_all_classes(b);
    double sum = 0.0;
    for (int d = 0; d < kDigitClasses; ++d) {
        const auto& ca = a.classes[d];
        const auto& cb = b.classes[d];
        for (std::size_t k = 0; k < config.samples_per_digit; ++k) {
            const std::size_t ia = pair_rng.index(ca.size());
            const std::size_t ib = pair_rng.index(cb.size());
            sum += scorer.score(ca[ia], cb[ib]);
        }
    }
    return sum / static_cast<double>(kDigitClasses * config.samples_per_digit);
}

std::uint64_t pair_seed(std::uint64_t master_seed, std::string_view name_a, std::string_view name_b) {
    if (name_b < name_a) std::swap(name_a, name_b);
    std::uint64_t h = fnv1a64(name_a);
    h = fnv1a64(std::string_view("\0", 1), h);
    h = fnv1a64(name_b, h);
    return splitmix64(master_seed ^ h);
}

std::size_t SimilarityMatrix::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw Error(Errc::invalid_argument, "no dataset named '" + std::string(name) + "' in matrix");
}

void validate_matrix(const SimilarityMatrix& m) {
    const std::size_t n = m.names.size();
    if (m.values.size() != n * n)
        throw Error(Errc::shape_mismatch, "matrix holds " + std::to_string(m.values.size()) +
                                              " values for " + std::to_string(n) + " names");
    std::set<std::string> seen;
    for (const auto& name : m.names)
        if (!seen.insert(name).second) throw Error(Errc::duplicate_name, "duplicate dataset name '" + name + "'");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = m.at(i, j);
            if (!(v >= 0.0 && v <= 1.0))
                throw Error(Errc::out_of_range, "matrix entry (" + m.names[i] + ", " + m.names[j] +
                                                    ") = " + std::to_string(v) + " outside [0, 1]");
            if (std::abs(v - m.at(j, i)) > kSymmetryTolerance)
                throw Error(Errc::asymmetric, "matrix entries (" + m.names[i] + ", " + m.names[j] +
                                                  ") and its mirror differ");
        }
}

SimilarityMatrix similarity_matrix(PairScorer& scorer, std::span<const Dataset> datasets,
                                   const SamplingConfig& config, std::size_t jobs,
                                   const ProgressFn& progress) {
    const std::size_t m = datasets.size();
    if (m < 2) throw Error(Errc::invalid_argument, "similarity matrix needs at least 2 datasets");
    std::set<std::string> seen;
    for (const auto& ds : datasets) {
        if (!seen.insert(ds.name).second)
            throw Error(Errc::duplicate_name, "duplicate dataset name '" + ds.name + "'");
        require_all_classes(ds);
    }
    scorer.prepare(datasets);

    SimilarityMatrix out;
    for (const auto& ds : datasets) out.names.push_back(ds.name);
    out.values.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) out.at(i, i) = 1.0;

    std::vector<std::pair<std::size_t, std::size_t>> work;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) work.emplace_back(i, j);

    const auto t0 = std::chrono::steady_clock::now();
    std::atomic<std::size_t> next{0};
    std::mutex report_mu;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            const std::size_t w = next.fetch_add(1);
            if (w >= work.size()) return;
            const auto [i, j] = work[w];
            try {
                // Canonical orientation: first dataset by name supplies the "a" image.
                const bool swap = datasets[j].name < datasets[i].name;
                const Dataset& a = swap ? datasets[j] : datasets[i];
                const Dataset& b = swap ? datasets[i] : datasets[j];
                Rng rng(pair_seed(config.master_seed, a.name, b.name));
                const double s = dataset_pair_similarity(scorer, a, b, config, rng);
                out.at(i, j) = s;
                out.at(j, i) = s;
                if (progress) {
                    const double elapsed =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    std::lock_guard lock(report_mu);
                    progress({a.name, b.name, s, elapsed});
                }
            } catch (...) {
                std::lock_guard lock(report_mu);
                if (!failure) failure = std::current_exception();
                next.store(work.size());
                return;
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, work.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    validate_matrix(out);
    return out;
}

// --- CSV -------------------------------------------------------------------

namespace {

void check_name(const std::string& name) {
    if (name.empty() || name.find_first_of(",\"\r\n") != std::string::npos)
        throw Error(Errc::invalid_argument, "dataset name '" + name + "' cannot be written to CSV");
}

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
    const std::string s(cell);
    char* end = nullptr;
    const double v = s.empty() ? 0.0 : std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw Error(Errc::non_numeric, "matrix csv row " + std::to_string(row) + " column " +
                                           std::to_string(col) + ": '" + s + "' is not a number");
    return v;
}

} // namespace

std::string matrix_csv(const SimilarityMatrix& m) {
    validate_matrix(m);
    std::string out;
    for (const auto& name : m.names) {
        check_name(name);
        out += ',' + name;
    }
    out += '\n';
    char buf[32];
    for (std::size_t i = 0; i < m.size(); ++i) {
        out += m.names[i];
        for (std::size_t j = 0; j < m.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.9g", m.at(i, j));
            out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

SimilarityMatrix parse_matrix_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        start = nl + 1;
    }
    if (lines.empty()) throw Error(Errc::decode, "matrix csv is empty");

    const auto header = split_line(lines[0]);
    if (header.size() < 2 || !header[0].empty())
        throw Error(Errc::decode, "matrix csv header must start with an empty cell followed by names");
    SimilarityMatrix m;
    for (std::size_t k = 1; k < header.size(); ++k) m.names.emplace_back(header[k]);
    const std::size_t n = m.names.size();
    if (lines.size() - 1 != n)
        throw Error(Errc::ragged_rows, "matrix csv has " + std::to_string(lines.size() - 1) +
                                           " data rows for " + std::to_string(n) + " names");
    m.values.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cells = split_line(lines[i + 1]);
        if (cells.size() != n + 1)
            throw Error(Errc::ragged_rows, "matrix csv row " + std::to_string(i + 1) + " has " +
                                               std::to_string(cells.size()) + " cells, expected " +
                                               std::to_string(n + 1));
        if (cells[0] != m.names[i])
            throw Error(Errc::name_mismatch, "matrix csv row " + std::to_string(i + 1) + " is labeled '" +
                                                 std::string(cells[0]) + "', header says '" + m.names[i] + "'");
        for (std::size_t j = 0; j < n; ++j) m.at(i, j) = parse_cell(cells[j + 1], i + 1, j + 1);
    }
    validate_matrix(m);
    return m;
}

void write_matrix_csv(const SimilarityMatrix& m, const std::filesystem::path& path) {
    write_file(path, matrix_csv(m));
}

SimilarityMatrix read_matrix_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return parse_matrix_csv(text);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

} // namespace numaff
