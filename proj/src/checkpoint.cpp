#include "fairsage/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "fairsage/binio.hpp"
#include "fairsage/errors.hpp"
#include "fairsage/text.hpp"

namespace fairsage {

namespace {

std::string join_counts(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::uint64_t manifest_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    if (!text::parse_u64(value, v))
        throw DataError("manifest key '" + key + "' holds a malformed count: " + value);
    return v;
}

std::vector<std::size_t> split_counts(const std::string& s) {
    std::vector<std::size_t> out;
    if (s.empty()) return out;
    for (const std::string& part : text::split(s, ','))
        out.push_back(static_cast<std::size_t>(manifest_u64("fanouts", part)));
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void save_checkpoint(const std::string& dir, const ModelConfig& cfg, const ModelParams& params) {
    validate(cfg);
    const auto specs = param_specs(cfg);
    if (specs.size() != params.size())
        throw DataError("parameter count does not match the model config");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& [name, t] = params[i];
        if (name != specs[i].name || t.rows() != specs[i].rows || t.cols() != specs[i].cols)
            throw DataError("parameter '" + name + "' does not match the model config");
    }

    std::filesystem::create_directories(dir);
    const std::string manifest_path = dir + "/manifest.txt";
    std::ofstream manifest(manifest_path);
    if (!manifest) throw DataError("cannot write " + manifest_path);
    manifest << "kind=" << model_kind_name(cfg.kind) << '\n'
             << "aggregator=" << aggregator_name(cfg.aggregator) << '\n'
             << "feature_set=" << feature_set_name(cfg.feature_set) << '\n'
             << "direction=" << direction_name(cfg.direction) << '\n'
             << "feature_dim=" << cfg.feature_dim << '\n'
             << "hidden_dim=" << cfg.hidden_dim << '\n'
             << "layers=" << cfg.layers << '\n'
             << "fanouts=" << join_counts(cfg.fanouts) << '\n'
             << "dropout_rate=" << fmt_double(cfg.dropout_rate) << '\n';
    if (!manifest.flush()) throw DataError("cannot write " + manifest_path);

    const std::string bin_path = dir + "/params.bin";
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw DataError("cannot write " + bin_path);
    binio::put_u64(bin, params.size());
    for (const auto& [name, t] : params) {
        binio::put_u64(bin, name.size());
        bin.write(name.data(), static_cast<std::streamsize>(name.size()));
        binio::put_u64(bin, t.rows());
        binio::put_u64(bin, t.cols());
        binio::put_array(bin, t.data(), t.size());
    }
    if (!bin.flush()) throw DataError("cannot write " + bin_path);
}

Checkpoint load_checkpoint(const std::string& dir) {
    const std::string manifest_path = dir + "/manifest.txt";
    std::ifstream manifest(manifest_path);
    if (!manifest) throw DataError("cannot open " + manifest_path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(manifest, line)) {
        ++lineno;
        const std::string t(text::trim(line));
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw DataError(manifest_path + ":" + std::to_string(lineno) + ": expected key=value");
        kv[t.substr(0, eq)] = t.substr(eq + 1);
    }
    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end())
            throw DataError(manifest_path + ": manifest lacks '" + std::string(key) + "'");
        return it->second;
    };

    Checkpoint ck;
    ck.config.kind = parse_model_kind(need("kind"));
    ck.config.aggregator = parse_aggregator(need("aggregator"));
    ck.config.feature_set = parse_feature_set(need("feature_set"));
    ck.config.direction = parse_direction(need("direction"));
    ck.config.feature_dim = static_cast<std::size_t>(manifest_u64("feature_dim", need("feature_dim")));
    ck.config.hidden_dim = static_cast<std::size_t>(manifest_u64("hidden_dim", need("hidden_dim")));
    ck.config.layers = static_cast<std::size_t>(manifest_u64("layers", need("layers")));
    ck.config.fanouts = split_counts(need("fanouts"));
    if (!text::parse_f64(need("dropout_rate"), ck.config.dropout_rate))
        throw DataError("manifest key 'dropout_rate' holds a malformed number");
    validate(ck.config);

    const std::string bin_path = dir + "/params.bin";
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw DataError("cannot open " + bin_path);
    const auto specs = param_specs(ck.config);
    const std::uint64_t count = binio::get_u64(bin);
    if (count != specs.size())
        throw DataError(bin_path + ": holds " + std::to_string(count) + " tensors, manifest needs " +
                        std::to_string(specs.size()));
    for (const auto& spec : specs) {
        const std::uint64_t name_len = binio::get_u64(bin);
        if (name_len > 4096) throw DataError(bin_path + ": implausible tensor name length");
        std::string name(name_len, '\0');
        bin.read(name.data(), static_cast<std::streamsize>(name_len));
        if (!bin) throw DataError("unexpected end of binary stream");
        const std::uint64_t rows = binio::get_u64(bin);
        const std::uint64_t cols = binio::get_u64(bin);
        if (name != spec.name || rows != spec.rows || cols != spec.cols)
            throw DataError(bin_path + ": tensor '" + name + "' [" + std::to_string(rows) + "x" +
                            std::to_string(cols) + "] does not fit the manifest (wanted '" +
                            spec.name + "' [" + std::to_string(spec.rows) + "x" +
                            std::to_string(spec.cols) + "])");
        Tensor t(rows, cols);
        binio::get_array(bin, t.data(), t.size());
        if (!t.all_finite()) throw DataError(bin_path + ": tensor '" + name + "' holds non-finite values");
        ck.params.add(name, std::move(t));
    }
    char extra;
    if (bin.read(&extra, 1)) throw DataError(bin_path + ": trailing bytes after the last tensor");
    return ck;
}

}  // namespace fairsage
