#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "mkdet/family.hpp"
#include "mkdet/trainer.hpp"

namespace mkdet {

inline constexpr std::string_view kModelFormat = "multikernel-model v1";
inline constexpr std::string_view kFamilyFormat = "multikernel-family v1";

/// Plain-text serialization. Reals are written in shortest round-trip form,
/// so reading back reproduces every value bit-exactly.
void write_model(std::ostream& out, const SvmModel& model);
SvmModel read_model(std::istream& in);
void save_model(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_model(const std::filesystem::path& path);

void write_family(std::ostream& out, const DetectorFamily& family);
DetectorFamily read_family(std::istream& in);
void save_family(const DetectorFamily& family, const std::filesystem::path& path);
DetectorFamily load_family(const std::filesystem::path& path);

/// FNV-1a over the model's parameters and vectors.
std::uint64_t model_hash(const SvmModel& model);

}  // namespace mkdet
