#pragma once

// Text checkpoint: a `STCKPT v1` header line, optional `#` comment lines,
// then one record per parameter:
//
//     name rank dim_1 .. dim_rank value_1 .. value_n
//
// Tokens may be separated by any whitespace. Values are written with 17
// significant digits so a save/load round trip is exact.

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stcad/tensor.hpp"

namespace stcad {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CheckpointRecord {
    std::string name;
    tensor::Shape shape;
    std::vector<double> values;
};

struct Checkpoint {
    std::vector<std::string> comments;  // without the leading '#'
    std::vector<CheckpointRecord> records;

    const CheckpointRecord* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, std::span<const tensor::Parameter> params,
                      const std::vector<std::string>& comments = {});
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, std::span<const tensor::Parameter> params,
                     const std::vector<std::string>& comments = {});
Checkpoint load_checkpoint(const std::string& path);

/// Copies record values into same-named parameters. Every parameter must be
/// present with a matching shape.
void restore_parameters(const Checkpoint& ckpt, std::span<tensor::Parameter> params);

}  // namespace stcad
