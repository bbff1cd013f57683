#pragma once

#include <stdexcept>
#include <string>

namespace iontrap {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Two ions occupy the same point; Coulomb terms are singular.
struct CoincidentIons : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoKinkFormed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConstraintSingular : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotAKinkInterface : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoDistortion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooFewExtrema : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Instability : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IonLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoRoot : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyGroup : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace iontrap
