#pragma once

#include <stdexcept>
#include <string>

namespace pmod {

// Every failure carries a short machine-readable kind; the CLI serializes it.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define PMOD_DEFINE_ERROR(Name, tag)                                   \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& msg) : Error(tag, msg) {}     \
    };

PMOD_DEFINE_ERROR(TruncationError, "truncation")
PMOD_DEFINE_ERROR(SingularSeriesError, "singular-series")
PMOD_DEFINE_ERROR(DegeneracyError, "degeneracy")
PMOD_DEFINE_ERROR(InconsistencyError, "inconsistency")
PMOD_DEFINE_ERROR(DomainError, "domain")
PMOD_DEFINE_ERROR(MisuseError, "misuse")
PMOD_DEFINE_ERROR(NumericError, "numeric")
PMOD_DEFINE_ERROR(BranchError, "branch")
PMOD_DEFINE_ERROR(GenericityError, "genericity")
PMOD_DEFINE_ERROR(PreparationError, "preparation-inconsistency")
PMOD_DEFINE_ERROR(PoleError, "pole")
PMOD_DEFINE_ERROR(InverseError, "inverse")
PMOD_DEFINE_ERROR(InfinitePeriodError, "infinite-period")
PMOD_DEFINE_ERROR(EscapeError, "escape")
PMOD_DEFINE_ERROR(GeometryError, "geometry")
PMOD_DEFINE_ERROR(ConvergenceError, "convergence")
PMOD_DEFINE_ERROR(ResolutionError, "resolution")
PMOD_DEFINE_ERROR(ComparisonError, "comparison")
PMOD_DEFINE_ERROR(ClassificationError, "classification")
PMOD_DEFINE_ERROR(NormalizationError, "normalization-mismatch")
PMOD_DEFINE_ERROR(CriterionError, "criterion")
PMOD_DEFINE_ERROR(DataError, "data")
PMOD_DEFINE_ERROR(FormatError, "format")

#undef PMOD_DEFINE_ERROR

}  // namespace pmod
