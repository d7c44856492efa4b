// Acceptance suite: one check per release criterion, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "organoquant/cells.hpp"
#include "organoquant/contours.hpp"
#include "organoquant/czi.hpp"
#include "organoquant/dataset.hpp"
#include "organoquant/image_ops.hpp"
#include "organoquant/stats.hpp"
#include "organoquant/synthetic.hpp"
#include "support/oracles.hpp"
#include "support/reference_data.hpp"

namespace fs = std::filesystem;
using namespace organoquant;

namespace {

struct Check {
    int failures = 0;
    std::vector<std::string> notes;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            ++failures;
            notes.push_back(what);
        }
    }
};

bool rel_close(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// --- 1: aggregation arithmetic over the reference tables --------------------

void criterion_table_arithmetic(Check& check) {
    auto rows = refdata::reference_rows();
    auto group_rows = [&](const char* g) {
        std::vector<stats::GroupRow> out;
        for (const auto& r : rows)
            if (r.group == g) out.push_back(r);
        return out;
    };
    auto wt = group_rows("WT");
    auto fko = group_rows("FKO");

    struct Case {
        const char* name;
        std::vector<stats::GroupRow>* rows;
        stats::Metric metric;
        double expected_mean;
    };
    std::vector<Case> cases = {
        {"WT contour mean", &wt, stats::Metric::ContourNo, 73.0 / 7.0},
        {"FKO contour mean", &fko, stats::Metric::ContourNo, 671.0 / 7.0},
        {"WT cell mean", &wt, stats::Metric::CellNo, 90.0},
        {"FKO cell mean", &fko, stats::Metric::CellNo, 92.0},
        {"WT intensity mean", &wt, stats::Metric::AvgIntensity, 464.8 / 7.0},
        {"FKO intensity mean", &fko, stats::Metric::AvgIntensity, 116.4 / 7.0},
    };
    for (const auto& c : cases) {
        stats::GroupSummary s = stats::aggregate_group(*c.rows, c.metric);
        check.expect(rel_close(s.mean, c.expected_mean, 1e-12),
                     std::string(c.name) + " mismatch");

        // standard deviations against the independent two-pass oracle
        std::vector<double> values;
        for (const auto& row : *c.rows) {
            if (c.metric == stats::Metric::ContourNo)
                values.push_back(static_cast<double>(*row.contour_total));
            else if (c.metric == stats::Metric::CellNo)
                values.push_back(static_cast<double>(*row.cell_count));
            else
                values.push_back(*row.avg_intensity);
        }
        auto oracle = oracles::two_pass_mean_std(values);
        check.expect(rel_close(s.std_dev, oracle.std_dev, 1e-12),
                     std::string(c.name) + " std mismatch");
    }
    // CR columns too, against the oracle
    for (auto* group : {&wt, &fko}) {
        stats::GroupSummary s = stats::aggregate_group(*group, stats::Metric::CR);
        std::vector<double> values;
        for (const auto& row : *group) values.push_back(row.cr->value());
        auto oracle = oracles::two_pass_mean_std(values);
        check.expect(rel_close(s.mean, oracle.mean, 1e-12), "CR mean mismatch");
        check.expect(rel_close(s.std_dev, oracle.std_dev, 1e-12), "CR std mismatch");
    }
    // spot value quoted at 4 decimals
    check.expect(std::abs(stats::aggregate_group(wt, stats::Metric::ContourNo).std_dev -
                          5.6526) < 1e-4,
                 "WT contour std spot value");
}

// --- 2: internal consistency of the reference contour rows ------------------

contours::Contour chain_of(long n, int row) {
    contours::Contour c;
    for (long i = 0; i < n; ++i) c.points.push_back({static_cast<int>(i), row});
    return c;
}

void criterion_reference_consistency(Check& check) {
    std::vector<refdata::ContourRef> all;
    for (const auto& r : refdata::kContoursWT) all.push_back(r);
    for (const auto& r : refdata::kContoursFKO) all.push_back(r);

    const long theta = 200;
    for (const auto& ref : all) {
        long n1 = std::llround(static_cast<double>(ref.total) / (ref.cr + 1.0));
        long n2 = ref.total - n1;
        check.expect(n1 >= 1, std::string(ref.id) + ": no long-contour count");
        check.expect(n2 >= 0, std::string(ref.id) + ": negative short-contour count");

        std::vector<contours::Contour> contour_list;
        int row = 0;
        for (long i = 0; i < n1; ++i) contour_list.push_back(chain_of(theta + 50, row += 2));
        for (long i = 0; i < n2; ++i) contour_list.push_back(chain_of(theta - 50, row += 2));
        contours::ContourStats s = contour_stats(contour_list, theta);

        check.expect(s.total == ref.total, std::string(ref.id) + ": total mismatch");
        check.expect(s.n1 == n1 && s.n2 == n2, std::string(ref.id) + ": partition mismatch");
        double cr = s.cr.value();
        // published ratios carry one decimal; exact divisions must be exact
        bool exact_division = n1 * std::llround(ref.cr * 10.0) == n2 * 10;
        if (exact_division)
            check.expect(cr == ref.cr, std::string(ref.id) + ": ratio not exact");
        check.expect(std::llround(cr * 10.0) == std::llround(ref.cr * 10.0),
                     std::string(ref.id) + ": ratio differs at table precision");
    }
}

// --- 3: directional separation of the two synthetic phenotypes --------------

void criterion_directional(Check& check) {
    contours::ContourParams cparams;
    auto wt = contours::analyze_contours(synthetic::ring_plane(256, 80, 86, 58000, 1200),
                                         cparams);
    auto mt = contours::analyze_contours(synthetic::fragments_plane(256, 48, 58000, 1200),
                                         cparams);
    check.expect(mt.stats.total > wt.stats.total, "fragmented type must have more contours");
    check.expect(wt.stats.cr.defined() && mt.stats.cr.defined(), "both ratios must be defined");
    if (wt.stats.cr.defined() && mt.stats.cr.defined())
        check.expect(mt.stats.cr.value() > wt.stats.cr.value(),
                     "fragmented type must have the larger ratio");

    cells::CellParams xparams;
    auto bright = cells::analyze_cells(synthetic::disk_grid_plane(192, 5, 7, 58000, 900),
                                       xparams);
    auto dim = cells::analyze_cells(synthetic::disk_grid_plane(192, 5, 7, 9000, 900), xparams);
    check.expect(bright.stats.i_avg > dim.stats.i_avg,
                 "bright cells must average brighter");
    double count_gap =
        std::abs(static_cast<double>(bright.stats.cell_count - dim.stats.cell_count));
    check.expect(count_gap <
                     0.1 * static_cast<double>(std::max(bright.stats.cell_count,
                                                        dim.stats.cell_count)),
                 "cell counts must stay within 10%");
    check.expect(bright.stats.cell_count > 0, "bright fixture must detect cells");
}

// --- 4: oracle equivalence ---------------------------------------------------

void criterion_oracles(Check& check) {
    std::mt19937 rng(424242);

    // connected components vs BFS flood fill
    for (int trial = 0; trial < 100; ++trial) {
        BinaryMask mask(64, 64);
        std::bernoulli_distribution coin(0.35);
        for (auto& b : mask.bits) b = coin(rng) ? 1 : 0;
        LabelMap map = img::label_components(mask, 0);
        auto oracle = oracles::flood_fill_components(mask, 0);
        bool ok = map.component_count == oracle.count;
        if (ok) {
            std::vector<std::vector<int>> mine(static_cast<std::size_t>(map.component_count));
            for (int i = 0; i < 64 * 64; ++i)
                if (map.labels[static_cast<std::size_t>(i)] > 0)
                    mine[static_cast<std::size_t>(map.labels[static_cast<std::size_t>(i)]) - 1]
                        .push_back(i);
            ok = mine == oracle.components;
        }
        check.expect(ok, "component labeling disagrees with flood fill, trial " +
                             std::to_string(trial));
        if (!ok) return;
    }

    // polygon suppression vs exhaustive greedy
    std::uniform_real_distribution<double> radius(0.8, 6.5);
    std::uniform_real_distribution<float> score(0.01f, 1.0f);
    for (int trial = 0; trial < 50; ++trial) {
        int count = 1 + static_cast<int>(rng() % 10);
        std::vector<cells::PolygonCandidate> candidates;
        for (int i = 0; i < count; ++i) {
            cells::PolygonCandidate c;
            c.center = {2 + static_cast<int>(rng() % 20), 2 + static_cast<int>(rng() % 20)};
            c.score = score(rng);
            for (int k = 0; k < 8; ++k) c.radii.push_back(static_cast<float>(radius(rng)));
            candidates.push_back(std::move(c));
        }
        std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.center.y * 24 + a.center.x < b.center.y * 24 + b.center.x;
        });
        double thresh = (trial % 5) * 0.2;
        auto mine = cells::polygon_nms(candidates, thresh, 24, 24);
        auto oracle = oracles::nms_oracle(candidates, thresh, 24, 24);
        bool ok = mine.size() == oracle.size();
        for (std::size_t i = 0; ok && i < mine.size(); ++i)
            ok = mine[i].candidate.center == candidates[oracle[i]].center &&
                 mine[i].candidate.score == candidates[oracle[i]].score;
        check.expect(ok, "suppression disagrees with the greedy oracle, trial " +
                             std::to_string(trial));
        if (!ok) return;
    }

    // aggregation vs two-pass mean/variance
    std::uniform_real_distribution<double> value(-100.0, 100.0);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 1 + static_cast<int>(rng() % 50);
        std::vector<double> values;
        std::vector<stats::GroupRow> rows;
        for (int i = 0; i < n; ++i) {
            values.push_back(value(rng));
            stats::GroupRow row;
            row.group = "g";
            row.image_id = "g" + std::to_string(i);
            row.avg_intensity = values.back();
            rows.push_back(row);
        }
        stats::GroupSummary s = stats::aggregate_group(rows, stats::Metric::AvgIntensity);
        auto oracle = oracles::two_pass_mean_std(values);
        check.expect(rel_close(s.mean, oracle.mean, 1e-12) &&
                         rel_close(s.std_dev, oracle.std_dev, 1e-10),
                     "aggregation disagrees with the two-pass oracle, trial " +
                         std::to_string(trial));
    }
}

// --- 5: metric exactness ------------------------------------------------------

void criterion_metric_exactness(Check& check) {
    auto instance = [](int id, std::vector<std::int32_t> px, float score = 1.0f) {
        cells::CellInstance inst;
        inst.id = id;
        inst.candidate.score = score;
        inst.pixels = std::move(px);
        return inst;
    };
    std::vector<cells::CellInstance> truth{instance(1, {0, 1, 2}), instance(2, {10, 11, 12})};

    check.expect(cells::average_precision(truth, truth, 0.5).ap == 1.0, "identical sets: ap 1");
    cells::ApResult none = cells::average_precision({}, truth, 0.5);
    check.expect(none.ap == 0.0 && none.fn == 2, "no predictions: ap 0");
    std::vector<cells::CellInstance> one{instance(1, {0, 1, 2})};
    check.expect(cells::average_precision(one, truth, 0.5).ap == 0.5, "one of two: ap 0.5");

    std::vector<std::uint16_t> px(64, 93);
    ChannelImage flat(8, 8, 8, px);
    std::vector<cells::CellInstance> cells_on_flat{instance(1, {0, 9, 18}),
                                                   instance(2, {5, 6})};
    check.expect(cells::measure_intensity(cells_on_flat, flat).i_avg == 93.0,
                 "constant image mean");

    std::vector<double> values{20.0, 60.0, 100.0};
    auto scaled = cells::normalize_intensities(values);
    check.expect(scaled.front() == 0.0 && scaled.back() == 100.0 && scaled[1] == 50.0,
                 "normalization endpoints");
}

// --- 6: format round-trips -----------------------------------------------------

void criterion_round_trips(Check& check) {
    std::mt19937 rng(20240818);
    for (int trial = 0; trial < 20; ++trial) {
        int w = 1 + static_cast<int>(rng() % 64);
        int h = 1 + static_cast<int>(rng() % 64);
        int planes_n = 1 + static_cast<int>(rng() % 8);
        std::vector<ChannelImage> planes;
        for (int c = 0; c < planes_n; ++c) {
            int depth = rng() % 2 ? 16 : 8;
            std::vector<std::uint16_t> px(static_cast<std::size_t>(w) * h);
            for (auto& v : px)
                v = static_cast<std::uint16_t>(rng() % (depth == 8 ? 256 : 65536));
            planes.emplace_back(w, h, depth, std::move(px));
        }
        auto bytes = ingest::write_fixture(planes);
        ingest::ContainerIndex index = ingest::parse_container(bytes);
        bool ok = index.subblocks.size() == static_cast<std::size_t>(planes_n);
        for (int c = 0; ok && c < planes_n; ++c) {
            auto marker = std::to_string(c);
            ok = ingest::extract_channel(index, bytes, marker, {{marker, c}})
                     .same_pixels(planes[static_cast<std::size_t>(c)]);
        }
        check.expect(ok, "container round-trip failed, trial " + std::to_string(trial));
    }

    BinaryMask blob(33, 29);
    for (int y = 6; y < 22; ++y)
        for (int x = 8; x < 27; ++x)
            if ((x - 17) * (x - 17) + (y - 14) * (y - 14) <= 64) blob.set(x, y, true);
    cells::DetectionMaps maps = cells::synthesize_maps(blob, 12);
    cells::DetectionMaps back = cells::load_maps(cells::save_maps(maps));
    check.expect(back.prob == maps.prob && back.dist == maps.dist &&
                     back.width == maps.width && back.n_rays == maps.n_rays,
                 "detection map round-trip changed values");

    auto rows = refdata::reference_rows();
    stats::GroupRow undef;
    undef.group = "Q";
    undef.image_id = "Q1";
    undef.cr = Ratio::undefined();
    rows.push_back(undef);
    check.expect(stats::parse_table_json(stats::emit_table(rows, stats::TableFormat::JSON)) ==
                     rows,
                 "table JSON round-trip changed rows");
}

// --- 7: morphology and tracing invariants ----------------------------------------

void criterion_morph_trace_invariants(Check& check) {
    std::mt19937 rng(987654);
    for (int trial = 0; trial < 100; ++trial) {
        int w = 8 + static_cast<int>(rng() % 56);
        int h = 8 + static_cast<int>(rng() % 56);
        BinaryMask mask(w, h);
        std::bernoulli_distribution coin(0.45);
        for (auto& b : mask.bits) b = coin(rng) ? 1 : 0;

        BinaryMask opened = img::morph_open(mask, 1);
        bool anti_extensive = true;
        for (std::size_t i = 0; i < mask.bits.size(); ++i)
            if (opened.bits[i] > mask.bits[i]) anti_extensive = false;
        check.expect(anti_extensive, "opening grew the mask, trial " + std::to_string(trial));
        check.expect(img::morph_open(opened, 1) == opened,
                     "opening is not idempotent, trial " + std::to_string(trial));

        LabelMap map = img::label_components(mask, 0);
        auto traced = contours::trace_boundaries(map);
        check.expect(static_cast<int>(traced.size()) == map.component_count,
                     "contour count != component count, trial " + std::to_string(trial));
        for (const auto& contour : traced) {
            for (const auto& p : contour.points) {
                bool touches = false;
                constexpr int dx4[4] = {1, -1, 0, 0};
                constexpr int dy4[4] = {0, 0, 1, -1};
                for (int d = 0; d < 4 && !touches; ++d) {
                    int nx = p.x + dx4[d];
                    int ny = p.y + dy4[d];
                    if (!mask.in_bounds(nx, ny) || !mask.at(nx, ny)) touches = true;
                }
                if (!touches) {
                    check.expect(false, "contour pixel buried in the interior, trial " +
                                            std::to_string(trial));
                    return;
                }
            }
        }
    }
}

// --- 8: end-to-end determinism through the CLI -----------------------------------

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        out[fs::relative(entry.path(), root).generic_string()] =
            std::string((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    }
    return out;
}

void criterion_determinism(Check& check) {
    fs::path scratch = "acceptance_scratch";
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    auto config = synthetic::write_sample_dataset(scratch / "data");

    auto run_cli = [&](const std::string& out_dir, int jobs) {
        std::string cmd = std::string(ORGANOQUANT_CLI_PATH) + " run --config " +
                          config.string() + " --output " + out_dir + " --jobs " +
                          std::to_string(jobs) + " > /dev/null 2>&1";
        int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    check.expect(run_cli((scratch / "out1").string(), 1) == 0, "first run must exit 0");
    check.expect(run_cli((scratch / "out2").string(), 1) == 0, "second run must exit 0");
    check.expect(run_cli((scratch / "out3").string(), 8) == 0, "parallel run must exit 0");

    auto t1 = tree_contents(scratch / "out1");
    auto t2 = tree_contents(scratch / "out2");
    auto t3 = tree_contents(scratch / "out3");
    check.expect(!t1.empty(), "run produced no files");
    check.expect(t1 == t2, "repeated runs differ");
    check.expect(t1 == t3, "thread count changed the outputs");
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<void(Check&)> fn;
};

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "reference table aggregation arithmetic", 1.0, criterion_table_arithmetic},
        {2, "reference contour rows internally consistent", 1.0,
         criterion_reference_consistency},
        {3, "directional separation of synthetic phenotypes", 10.0, criterion_directional},
        {4, "oracle equivalence (labeling, suppression, aggregation)", 30.0,
         criterion_oracles},
        {5, "metric exactness (matching score, means, normalization)", 1.0,
         criterion_metric_exactness},
        {6, "format round-trips (container, maps, tables)", 10.0, criterion_round_trips},
        {7, "morphology and tracing invariants", 10.0, criterion_morph_trace_invariants},
        {8, "end-to-end determinism across runs and thread counts", 20.0,
         criterion_determinism},
    };

    int failed = 0;
    for (const auto& criterion : criteria) {
        Check check;
        auto start = std::chrono::steady_clock::now();
        try {
            criterion.fn(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("unhandled error: ") + e.what());
        }
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        check.expect(elapsed < criterion.budget_seconds,
                     "runtime " + std::to_string(elapsed) + "s exceeds " +
                         std::to_string(criterion.budget_seconds) + "s");

        bool ok = check.failures == 0;
        if (!ok) ++failed;
        std::printf("[%s] %d. %s (%.2fs)\n", ok ? "PASS" : "FAIL", criterion.id,
                    criterion.name, elapsed);
        for (const auto& note : check.notes) std::printf("       - %s\n", note.c_str());
    }
    if (failed) std::printf("%d criterion(s) failed\n", failed);
    else std::printf("all %zu criteria passed\n", criteria.size());
    return failed == 0 ? 0 : 1;
}
