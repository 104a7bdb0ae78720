#include "glitchhunter/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "glitchhunter/error.hpp"
#include "glitchhunter/util.hpp"

namespace glitchhunter::simlab {

namespace {

const char* kWordPool[20] = {"Red",  "Blue",  "Stone", "House", "River", "Cloud", "Key",
                             "Primary", "Data", "Value", "Light", "Wind",  "Tree",  "North",
                             "Gate", "Field", "Book",  "Star",  "Iron",  "Glass"};

const char kSymbolPool[] = "}{#$%&+=!?";  // no '*', '-', quotes, or whitespace

std::string base_n_letters(std::size_t q) {
    std::string digits;
    do {
        digits.push_back(char('a' + q % 26));
        q /= 26;
    } while (q > 0);
    std::reverse(digits.begin(), digits.end());
    return digits;
}

void validate(const SimSpec& spec) {
    if (spec.n == 0) throw Error(Errc::SpecInvalid, "n must be positive");
    if (spec.m == 0) throw Error(Errc::SpecInvalid, "m must be positive");
    if (spec.glitch_count > spec.n)
        throw Error(Errc::SpecInvalid, "glitch_count exceeds vocab size");
    if (spec.glitch_count > 0 && spec.cluster_count == 0)
        throw Error(Errc::SpecInvalid, "cluster_count must be >= 1 when glitch tokens are planted");
    if (!(spec.cluster_tightness > 0.0) || spec.cluster_tightness > 1.0)
        throw Error(Errc::SpecInvalid, "cluster_tightness must be in (0, 1]");
    if (spec.scatter_fraction < 0.0 || spec.scatter_fraction > 1.0)
        throw Error(Errc::SpecInvalid, "scatter_fraction must be in [0, 1]");
    if (spec.model_name.empty()) throw Error(Errc::SpecInvalid, "model_name must be non-empty");
}

}  // namespace

std::string synth_token_string(std::size_t i) {
    std::size_t q = i / 5;
    switch (i % 5) {
        case 0: {  // word concatenation, always at least two pool words
            std::string digits;
            do {
                digits.push_back(char(q % 20));
                q /= 20;
            } while (q > 0);
            if (digits.size() < 2) digits.push_back(0);
            std::string out;
            for (auto it = digits.rbegin(); it != digits.rend(); ++it) out += kWordPool[int(*it)];
            return out;
        }
        case 1:
            return "zq" + base_n_letters(q);
        case 2: {  // symbol run
            std::string digits;
            do {
                digits.push_back(kSymbolPool[q % 10]);
                q /= 10;
            } while (q > 0);
            std::reverse(digits.begin(), digits.end());
            return "}}" + digits;
        }
        case 3:
            return "\\k" + base_n_letters(q);
        default:
            return "\xC3\xA9" + base_n_letters(q);  // U+00E9
    }
}

SimBundle generate(const SimSpec& spec) {
    validate(spec);
    util::Rng rng(spec.seed);

    SimBundle sim;
    sim.spec = spec;
    sim.planted = rng.sample_without_replacement(spec.n, spec.glitch_count);

    std::vector<TokenId> order = sim.planted;
    rng.shuffle(order);
    auto scattered_count =
        std::size_t(std::llround(spec.scatter_fraction * double(spec.glitch_count)));
    scattered_count = std::min(scattered_count, order.size());

    sim.cluster_of.assign(spec.n, kNoCluster);
    std::size_t next_cluster = 0;
    for (std::size_t j = scattered_count; j < order.size(); ++j) {
        sim.cluster_of[order[j]] = std::uint32_t(next_cluster % spec.cluster_count);
        ++next_cluster;
    }

    std::vector<double> region(spec.m);
    for (double& v : region) v = rng.gaussian();
    std::vector<std::vector<double>> centers(spec.cluster_count, std::vector<double>(spec.m));
    for (auto& center : centers)
        for (std::size_t d = 0; d < spec.m; ++d)
            center[d] = region[d] + 3.0 * spec.cluster_tightness * rng.gaussian();

    sim.bundle.model_name = spec.model_name;
    sim.bundle.vocab.strings.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i)
        sim.bundle.vocab.strings.push_back(synth_token_string(i));

    sim.bundle.embeddings.rows = spec.n;
    sim.bundle.embeddings.cols = spec.m;
    sim.bundle.embeddings.data.resize(spec.n * spec.m);
    for (std::size_t i = 0; i < spec.n; ++i) {
        auto row = sim.bundle.embeddings.row_mut(i);
        std::uint32_t c = sim.cluster_of[i];
        if (c == kNoCluster) {
            for (std::size_t d = 0; d < spec.m; ++d) row[d] = float(rng.gaussian());
        } else {
            for (std::size_t d = 0; d < spec.m; ++d)
                row[d] = float(centers[c][d] + spec.cluster_tightness * rng.gaussian());
        }
    }
    return sim;
}

void write(const SimBundle& sim, const std::filesystem::path& dir) {
    embedstore::write_model_bundle(dir, sim.bundle);
    nlohmann::ordered_json truth = nlohmann::ordered_json::array();
    for (TokenId id : sim.planted) truth.push_back(id);
    std::ofstream out(dir / "truth.json", std::ios::binary);
    if (!out) throw Error(Errc::IoFailure, (dir / "truth.json").string());
    out << truth.dump() << "\n";
    if (!out) throw Error(Errc::IoFailure, (dir / "truth.json").string());
}

std::vector<TokenId> load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingFile, path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::IoFailure, path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw Error(Errc::IoFailure, path.string() + ": expected an id array");
    std::vector<TokenId> ids;
    ids.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
            throw Error(Errc::IoFailure, path.string() + ": ids must be non-negative integers");
        ids.push_back(TokenId(v.get<std::int64_t>()));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace glitchhunter::simlab
