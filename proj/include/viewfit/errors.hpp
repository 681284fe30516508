#pragma once

#include <stdexcept>
#include <string>

namespace viewfit {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};
struct DuplicateId : std::runtime_error {
    explicit DuplicateId(const std::string& id)
        : std::runtime_error("duplicate profile id: " + id) {}
};
struct TooShort : std::runtime_error {
    explicit TooShort(const std::string& id)
        : std::runtime_error("profile too short: " + id) {}
};
struct AllZeroViews : std::runtime_error {
    explicit AllZeroViews(const std::string& id)
        : std::runtime_error("profile has no views after first-month removal: " + id) {}
};
struct EmptyCorpus : std::runtime_error {
    EmptyCorpus() : std::runtime_error("corpus is empty") {}
};
struct SingularDesign : std::runtime_error {
    explicit SingularDesign(const std::string& what) : std::runtime_error(what) {}
};
struct DegenerateBreakpoints : std::runtime_error {
    explicit DegenerateBreakpoints(const std::string& what) : std::runtime_error(what) {}
};
struct NotConverged : std::runtime_error {
    explicit NotConverged(const std::string& what) : std::runtime_error(what) {}
};
struct TooFewSegments : std::runtime_error {
    TooFewSegments() : std::runtime_error("sign pattern needs at least 2 segments") {}
};
struct MixedSegmentCounts : std::runtime_error {
    MixedSegmentCounts() : std::runtime_error("features have mixed segment counts") {}
};
struct ZeroVariance : std::runtime_error {
    explicit ZeroVariance(const std::string& var)
        : std::runtime_error("zero-variance variable: " + var) {}
};
struct EmptyInput : std::runtime_error {
    explicit EmptyInput(const std::string& what) : std::runtime_error(what) {}
};
struct DimensionMismatch : std::runtime_error {
    DimensionMismatch() : std::runtime_error("points have mismatched dimensions") {}
};
struct InvalidK : std::runtime_error {
    explicit InvalidK(const std::string& what) : std::runtime_error(what) {}
};
struct Misalignment : std::runtime_error {
    Misalignment() : std::runtime_error("labels and patterns are misaligned") {}
};
struct EmptyGroup : std::runtime_error {
    EmptyGroup() : std::runtime_error("empty cluster/prototype group") {}
};
struct DegenerateCovariance : std::runtime_error {
    DegenerateCovariance() : std::runtime_error("all points identical; covariance is zero") {}
};
struct BinMismatch : std::runtime_error {
    BinMismatch() : std::runtime_error("histograms have different bin specifications") {}
};
struct MissingUpstreamArtifact : std::runtime_error {
    explicit MissingUpstreamArtifact(const std::string& path)
        : std::runtime_error("missing upstream artifact: " + path) {}
};

}  // namespace viewfit
