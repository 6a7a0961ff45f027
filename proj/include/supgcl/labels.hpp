#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace supgcl {

struct SurvivalRecord {
    double time = 1.0;
    /// 1 deceased, 0 censored.
    int event = 0;
};

/// Named rows of 0/1 bits, one row per gene (node tasks) or patient.
struct BitTable {
    std::vector<std::string> ids;
    std::vector<std::string> columns;
    std::vector<std::vector<int>> bits;
};

struct ClassTable {
    std::vector<std::string> ids;
    std::vector<std::size_t> classes;
};

struct SurvivalTable {
    std::vector<std::string> ids;
    std::vector<SurvivalRecord> records;
};

// TSV with a header row; first column is the id.
//   bits:     id  <col>...      (values 0/1)
//   classes:  id  class         (non-negative integers)
//   survival: id  time  event   (time > 0, event 0/1)
BitTable read_bit_table(const std::filesystem::path& path);
void write_bit_table(const BitTable& t, const std::filesystem::path& path);
ClassTable read_class_table(const std::filesystem::path& path);
void write_class_table(const ClassTable& t, const std::filesystem::path& path);
SurvivalTable read_survival_table(const std::filesystem::path& path);
void write_survival_table(const SurvivalTable& t, const std::filesystem::path& path);

} // namespace supgcl
