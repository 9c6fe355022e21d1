#pragma once

// Dataset directories (train.txt / valid.txt / test.txt) and their
// fingerprints.

#include <array>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "ruledict/graph.hpp"

namespace ruledict {

struct Dataset {
  std::filesystem::path dir;
  std::vector<RawTriple> train;
  std::vector<RawTriple> valid;
  std::vector<RawTriple> test;
};

/// train.txt is required; valid.txt and test.txt are loaded when present.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("dataset directory not found: " + dir.string());
  }
  Dataset d;
  d.dir = dir;
  d.train = load_split(dir, Split::train);
  auto optional_split = [&](Split s) {
    const auto path = dir / split_file_name(s);
    return std::filesystem::exists(path) ? load_triples(path) : std::vector<RawTriple>{};
  };
  d.valid = optional_split(Split::valid);
  d.test = optional_split(Split::test);
  return d;
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 init failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

/// Sizes and SHA-256 of every split file present, plus graph sizes.
inline nlohmann::ordered_json fingerprint(const Dataset& d, const KnowledgeGraph& g) {
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (Split s : {Split::train, Split::valid, Split::test}) {
    const auto path = d.dir / split_file_name(s);
    if (!std::filesystem::exists(path)) continue;
    files.push_back({{"name", std::string(split_file_name(s))},
                     {"bytes", std::filesystem::file_size(path)},
                     {"sha256", sha256_file(path)}});
  }
  return {{"files", files},
          {"entities", g.num_entities()},
          {"base_relations", g.num_base_relations()},
          {"train_triples", d.train.size()},
          {"valid_triples", d.valid.size()},
          {"test_triples", d.test.size()}};
}

/// Every `stride`-th test triple, starting with the first. A fraction f
/// maps to stride round(1 / f).
inline std::vector<RawTriple> subsample(std::span<const RawTriple> triples, std::size_t stride) {
  std::vector<RawTriple> out;
  if (stride == 0) stride = 1;
  for (std::size_t i = 0; i < triples.size(); i += stride) out.push_back(triples[i]);
  return out;
}

}  // namespace ruledict
