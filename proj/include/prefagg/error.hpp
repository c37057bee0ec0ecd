#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace prefagg {

// Bad input: non-finite values, dimension mismatches, violated preconditions.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An alternative identifier that is not part of the set.
class LookupError : public std::out_of_range {
public:
    explicit LookupError(const std::string& id)
        : std::out_of_range("unknown alternative id '" + id + "'"), id_(id) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

// Some unordered pair of alternatives was never compared.
class IncompleteCoverage : public std::runtime_error {
public:
    using Pair = std::pair<std::string, std::string>;

    explicit IncompleteCoverage(std::vector<Pair> missing)
        : std::runtime_error(describe(missing)), missing_(std::move(missing)) {}

    const std::vector<Pair>& missing() const noexcept { return missing_; }

private:
    static std::string describe(const std::vector<Pair>& missing) {
        std::string msg = "comparisons do not cover every pair; missing:";
        for (const auto& [a, b] : missing) msg += " {" + a + "," + b + "}";
        return msg;
    }

    std::vector<Pair> missing_;
};

// Feature combination that the toolkit deliberately does not support,
// e.g. an approximate clone of an alternative with tabular rewards.
class UnsupportedCombination : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace prefagg
