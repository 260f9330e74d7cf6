#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lge/tensor.hpp"

namespace lge {

// Versioned binary blob of named f64 tensors. Layout:
//   magic "LGTNSR01", u32 tensor count, then per tensor:
//   u32 name length, name bytes, u32 ndim, u64 dims..., f64 data.
// Metadata (step count, config hash, ...) lives in a JSON sidecar at
// <path>.json.
namespace ckpt {

constexpr char kMagic[8] = {'L', 'G', 'T', 'N', 'S', 'R', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated stream");
    return v;
}

template <typename Real>
void write_tensor(std::ostream& os, const std::string& name, const Tensor<Real>& t) {
    write_pod(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(os, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) write_pod(os, static_cast<std::uint64_t>(d));
    for (Real v : t.data) write_pod(os, static_cast<double>(v));
}

template <typename Real>
std::pair<std::string, Tensor<Real>> read_tensor(std::istream& is) {
    const auto name_len = read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto ndim = read_pod<std::uint32_t>(is);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>(is));
    Tensor<Real> t(shape);
    for (Real& v : t.data) v = static_cast<Real>(read_pod<double>(is));
    return {name, std::move(t)};
}

}  // namespace ckpt

template <typename Real>
void save_tensors(const std::string& path, const std::map<std::string, Tensor<Real>>& tensors,
                  const nlohmann::json& metadata) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_tensors: cannot open " + path);
    os.write(ckpt::kMagic, sizeof(ckpt::kMagic));
    ckpt::write_pod(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) ckpt::write_tensor(os, name, t);
    if (!os) throw std::runtime_error("save_tensors: write failure on " + path);

    std::ofstream meta(path + ".json", std::ios::binary | std::ios::trunc);
    if (!meta) throw std::runtime_error("save_tensors: cannot open " + path + ".json");
    meta << metadata.dump(2) << '\n';
}

template <typename Real>
std::map<std::string, Tensor<Real>> load_tensors(const std::string& path,
                                                 nlohmann::json* metadata = nullptr) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_tensors: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, ckpt::kMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_tensors: bad magic in " + path);
    const auto count = ckpt::read_pod<std::uint32_t>(is);
    std::map<std::string, Tensor<Real>> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto [name, t] = ckpt::read_tensor<Real>(is);
        out.emplace(std::move(name), std::move(t));
    }
    if (metadata) {
        std::ifstream meta(path + ".json", std::ios::binary);
        if (!meta) throw std::runtime_error("load_tensors: missing sidecar " + path + ".json");
        meta >> *metadata;
    }
    return out;
}

// Parameter values plus optimizer moments, prefixed so one blob restores both.
template <typename Real>
void save_model(const std::string& path, const ParamStore<Real>& params,
                const AdamState<Real>* adam, nlohmann::json metadata) {
    std::map<std::string, Tensor<Real>> tensors;
    for (const auto& [name, p] : params) tensors.emplace("param." + name, p.value);
    if (adam) {
        for (const auto& [name, t] : adam->first_moments()) tensors.emplace("adam.m." + name, t);
        for (const auto& [name, t] : adam->second_moments()) tensors.emplace("adam.v." + name, t);
        metadata["adam_step"] = adam->step_count();
    }
    save_tensors(path, tensors, metadata);
}

template <typename Real>
void load_model(const std::string& path, ParamStore<Real>& params, AdamState<Real>* adam,
                nlohmann::json* metadata = nullptr) {
    nlohmann::json meta;
    auto tensors = load_tensors<Real>(path, &meta);
    for (auto& [name, p] : params) {
        auto it = tensors.find("param." + name);
        if (it == tensors.end())
            throw std::runtime_error("load_model: checkpoint missing tensor " + name);
        if (!it->second.same_shape(p.value))
            throw std::runtime_error("load_model: shape mismatch for " + name);
        p.value = it->second;
    }
    if (adam) {
        for (auto& [name, t] : adam->first_moments()) {
            auto it = tensors.find("adam.m." + name);
            if (it == tensors.end())
                throw std::runtime_error("load_model: checkpoint missing moment for " + name);
            t = it->second;
        }
        for (auto& [name, t] : adam->second_moments()) t = tensors.at("adam.v." + name);
        adam->set_step_count(meta.value("adam_step", std::uint64_t{0}));
    }
    if (metadata) *metadata = std::move(meta);
}

}  // namespace lge
