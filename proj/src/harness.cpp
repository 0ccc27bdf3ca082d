#include "grounder/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <mutex>
#include <thread>

#include "grounder/errors.hpp"
#include "grounder/format.hpp"
#include "grounder/rng.hpp"

namespace grounder {

std::string_view to_string(SearchMode m) noexcept {
    return m == SearchMode::SingleStage ? "single-stage" : "two-stage";
}

std::string domain_key(const EvalRecord& r) {
    std::string key(r.device ? to_string(*r.device) : "unlabeled");
    key += '/';
    key += r.element ? to_string(*r.element) : "unlabeled";
    return key;
}

nlohmann::json config_echo(const EvalOptions& opts, const std::string& predictor_name) {
    const auto& s = opts.search;
    return {{"mode", to_string(opts.mode)},
            {"n_initial", s.n_initial},
            {"n_refine", s.n_refine},
            {"temperature", s.temperature},
            {"roi", {s.roi_dims.width, s.roi_dims.height}},
            {"sigma", s.kde.variance},
            {"mean_shift_max_iters", s.kde.mean_shift_max_iters},
            {"mean_shift_tol", s.kde.mean_shift_tol},
            {"strategy", to_string(s.strategy)},
            {"union_vote", s.union_vote},
            {"predictor", predictor_name},
            {"seed", opts.seed}};
}

namespace {

RecordOutcome run_one(const EvalRecord& record, const EvalOptions& opts, Predictor& predictor) {
    RecordOutcome out;
    out.id = record.id;
    out.domain = domain_key(record);
    try {
        const auto query = record.query();
        PixelCoord final_coord;
        if (opts.mode == SearchMode::SingleStage) {
            final_coord = single_stage_search(query, opts.search.n_initial, opts.search.temperature,
                                              opts.search.strategy, opts.search.kde, predictor);
        } else {
            final_coord = two_stage_search(query, opts.search, predictor).final_coord;
        }
        out.final_coord = final_coord;
        out.hit = point_in_bbox(final_coord, record.gt);
    } catch (const InvalidConfig&) {
        throw;
    } catch (const Error& e) {
        out.reason = e.what();
    }
    return out;
}

}  // namespace

EvalReport evaluate(const std::vector<EvalRecord>& records, const EvalOptions& opts,
                    Predictor& predictor) {
    if (records.empty()) {
        throw EmptyDataset("nothing to evaluate");
    }
    validate(opts.search);
    if (opts.jobs < 1) {
        throw InvalidConfig("jobs must be at least 1");
    }

    std::vector<RecordOutcome> outcomes(records.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr config_error;
    std::mutex error_mutex;

    const auto worker = [&] {
        for (std::size_t i = next++; i < records.size() && !failed; i = next++) {
            try {
                outcomes[i] = run_one(records[i], opts, predictor);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!config_error) config_error = std::current_exception();
                failed = true;
            }
        }
    };
    {
        const auto workers = static_cast<std::size_t>(
            std::max(1, std::min(opts.jobs, predictor.max_concurrency())));
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < std::min(workers, records.size()); ++w) {
            pool.emplace_back(worker);
        }
        worker();
    }
    if (config_error) std::rethrow_exception(config_error);

    EvalReport report;
    report.config = config_echo(opts, predictor.name());
    for (auto& o : outcomes) {
        auto& d = report.per_domain[o.domain];
        ++d.total;
        ++report.total;
        if (o.hit) {
            ++d.hits;
            ++report.hits;
        }
    }
    report.records = std::move(outcomes);
    return report;
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json domains = nlohmann::json::object();
    for (const auto& [key, d] : report.per_domain) {
        domains[key] = {{"hits", d.hits}, {"total", d.total}, {"accuracy", d.accuracy()}};
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& o : report.records) {
        nlohmann::json row = {{"id", o.id}, {"hit", o.hit}, {"domain", o.domain}};
        row["final"] = o.final_coord ? nlohmann::json{o.final_coord->x, o.final_coord->y}
                                     : nlohmann::json(nullptr);
        if (!o.reason.empty()) row["reason"] = o.reason;
        rows.push_back(std::move(row));
    }
    return {{"overall_accuracy", report.overall_accuracy()},
            {"hits", report.hits},
            {"total", report.total},
            {"per_domain", std::move(domains)},
            {"records", std::move(rows)},
            {"config", report.config}};
}

std::string format_table(const EvalReport& report) {
    std::map<std::string, std::map<std::string, DomainStats>> grid;
    std::map<std::string, DomainStats> by_element;
    for (const auto& [key, d] : report.per_domain) {
        const auto slash = key.find('/');
        const auto device = key.substr(0, slash);
        const auto element = key.substr(slash + 1);
        auto& cell = grid[device][element];
        cell.hits += d.hits;
        cell.total += d.total;
        auto& col = by_element[element];
        col.hits += d.hits;
        col.total += d.total;
    }

    const auto cell = [](const DomainStats& d) {
        char buf[48];
        if (d.total == 0) {
            std::snprintf(buf, sizeof(buf), "%18s", "-");
        } else {
            std::snprintf(buf, sizeof(buf), "%7.2f%% (%zu/%zu)", 100.0 * d.accuracy(), d.hits,
                          d.total);
        }
        return std::string(buf);
    };
    const auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };

    std::ostringstream out;
    out << pad("device", 12);
    for (const auto& [element, _] : by_element) out << "  " << pad(element, 22);
    out << "  " << "avg\n";
    for (const auto& [device, row] : grid) {
        DomainStats total;
        out << pad(device, 12);
        for (const auto& [element, _] : by_element) {
            const auto it = row.find(element);
            const DomainStats d = it == row.end() ? DomainStats{} : it->second;
            total.hits += d.hits;
            total.total += d.total;
            out << "  " << pad(cell(d), 22);
        }
        out << "  " << cell(total) << '\n';
    }
    out << pad("all", 12);
    for (const auto& [element, d] : by_element) out << "  " << pad(cell(d), 22);
    out << "  " << cell(DomainStats{report.hits, report.total}) << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------

TilingConfig default_tiling(const ImageDims& dims) {
    const auto block = std::max<std::int64_t>(1, dims.width);
    return {block, block / 10};
}

std::vector<RoI> tile_tall_image(const ImageDims& dims, const TilingConfig& cfg) {
    if (!is_valid(dims)) throw InvalidConfig("image dimensions must be positive");
    if (cfg.block_height < 1) throw InvalidConfig("block_height must be positive");
    if (cfg.overlap < 0 || cfg.overlap >= cfg.block_height) {
        throw InvalidConfig("overlap must lie in [0, block_height)");
    }
    if (dims.height <= cfg.block_height) {
        return {RoI{{0.0, 0.0}, dims}};
    }
    const std::int64_t stride = cfg.block_height - cfg.overlap;
    std::vector<RoI> blocks;
    std::int64_t y = 0;
    for (; y + cfg.block_height < dims.height; y += stride) {
        blocks.push_back(RoI{{0.0, static_cast<double>(y)}, {dims.width, cfg.block_height}});
    }
    blocks.push_back(RoI{{0.0, static_cast<double>(dims.height - cfg.block_height)},
                         {dims.width, cfg.block_height}});
    return blocks;
}

// ---------------------------------------------------------------------------

void validate(const SynthBenchConfig& cfg) {
    if (cfg.n_records == 0) throw InvalidConfig("synthetic corpus needs at least one record");
    if (cfg.image_sizes.empty()) throw InvalidConfig("synthetic corpus needs image sizes");
    const auto good_range = [](const auto& r) { return r.first >= 1 && r.first <= r.second; };
    if (!good_range(cfg.text_width) || !good_range(cfg.text_height) || !good_range(cfg.icon_side)) {
        throw InvalidConfig("element size ranges must be positive and ordered");
    }
    const auto biggest = std::max({cfg.text_width.second, cfg.text_height.second, cfg.icon_side.second});
    for (const auto& d : cfg.image_sizes) {
        if (!is_valid(d) || std::min(d.width, d.height) < biggest) {
            throw InvalidConfig("every image size must fit the largest element");
        }
    }
}

std::vector<EvalRecord> gen_synth_benchmark(const SynthBenchConfig& cfg) {
    validate(cfg);
    constexpr Device kDevices[] = {Device::Mobile, Device::Desktop, Device::Web};
    constexpr ElementKind kElements[] = {ElementKind::Text, ElementKind::Icon};

    std::vector<EvalRecord> out;
    out.reserve(cfg.n_records);
    for (std::size_t i = 0; i < cfg.n_records; ++i) {
        Rng rng(stream_key(cfg.rng_seed, static_cast<std::uint64_t>(i)));
        EvalRecord r;
        char id[32];
        std::snprintf(id, sizeof(id), "synth-%05zu", i);
        r.id = id;
        r.device = kDevices[i % 3];
        r.element = kElements[(i / 3) % 2];

        const auto pick = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(cfg.image_sizes.size()) - 1));
        r.dims = cfg.image_sizes[pick];
        if (*r.device == Device::Mobile && r.dims.width > r.dims.height) {
            std::swap(r.dims.width, r.dims.height);
        }

        std::int64_t w = 0;
        std::int64_t h = 0;
        if (*r.element == ElementKind::Icon) {
            w = h = rng.uniform_int(cfg.icon_side.first, cfg.icon_side.second);
        } else {
            w = rng.uniform_int(cfg.text_width.first, cfg.text_width.second);
            h = rng.uniform_int(cfg.text_height.first, cfg.text_height.second);
        }
        const auto x0 = rng.uniform_int(0, r.dims.width - w);
        const auto y0 = rng.uniform_int(0, r.dims.height - h);
        r.gt = {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x0 + w),
                static_cast<double>(y0 + h)};
        r.image = "synth://" + r.id + ".png";
        r.instruction = std::string("Click the ") + std::string(to_string(*r.element)) +
                        " element #" + std::to_string(i);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(AblationAxis a) noexcept {
    switch (a) {
        case AblationAxis::N:
            return "n";
        case AblationAxis::Temperature:
            return "t";
        case AblationAxis::RoiSize:
            return "roi";
        case AblationAxis::Strategy:
            break;
    }
    return "strategy";
}

std::optional<AblationAxis> parse_axis(std::string_view s) noexcept {
    if (s == "n" || s == "N") return AblationAxis::N;
    if (s == "t" || s == "T" || s == "temperature") return AblationAxis::Temperature;
    if (s == "roi" || s == "roi_size" || s == "roi-size") return AblationAxis::RoiSize;
    if (s == "strategy") return AblationAxis::Strategy;
    return std::nullopt;
}

namespace {

template <typename T>
T parse_value(const std::string& text, const char* what) {
    T v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InvalidConfig(std::string("invalid ") + what + " value '" + text + "'");
    }
    return v;
}

}  // namespace

EvalOptions apply_axis(const EvalOptions& base, AblationAxis axis, const std::string& value) {
    EvalOptions opts = base;
    switch (axis) {
        case AblationAxis::N: {
            const int n = parse_value<int>(value, "N");
            opts.search.n_initial = n;
            opts.search.n_refine = n;
            break;
        }
        case AblationAxis::Temperature:
            opts.search.temperature = parse_value<double>(value, "temperature");
            break;
        case AblationAxis::RoiSize: {
            const auto side = parse_value<std::int64_t>(value, "RoI size");
            opts.search.roi_dims = {side, side};
            break;
        }
        case AblationAxis::Strategy: {
            const auto s = parse_strategy(value);
            if (!s) throw InvalidConfig("unknown strategy '" + value + "'");
            opts.search.strategy = *s;
            break;
        }
    }
    validate(opts.search);
    return opts;
}

std::vector<AblationRow> ablation_sweep(const std::vector<EvalRecord>& records, AblationAxis axis,
                                        const std::vector<std::string>& values,
                                        const EvalOptions& base, Predictor& predictor) {
    if (values.empty()) throw InvalidConfig("ablation needs at least one value");
    std::vector<EvalOptions> configs;
    configs.reserve(values.size());
    for (const auto& v : values) configs.push_back(apply_axis(base, axis, v));

    std::vector<AblationRow> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto report = evaluate(records, configs[i], predictor);
        rows.push_back({values[i], report.overall_accuracy(), report.hits, report.total});
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = "value,accuracy,hits,total\n";
    for (const auto& r : rows) {
        out += r.value + "," + format_number(r.accuracy) + "," + std::to_string(r.hits) + "," +
               std::to_string(r.total) + "\n";
    }
    return out;
}

}  // namespace grounder
