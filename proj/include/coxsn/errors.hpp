#pragma once

#include <stdexcept>
#include <string>

namespace coxsn {

/// A query that needs independent increments was given a non-additive model.
struct NonAdditiveModel : std::domain_error {
    explicit NonAdditiveModel(const std::string& what) : std::domain_error(what) {}
};

/// A requested jump moment does not exist for the configured distribution.
struct MomentDivergence : std::domain_error {
    explicit MomentDivergence(const std::string& what) : std::domain_error(what) {}
};

/// Conditioning on points in an interval that carries no mass.
struct ImpossibleConditioning : std::domain_error {
    explicit ImpossibleConditioning(const std::string& what) : std::domain_error(what) {}
};

}  // namespace coxsn
