#pragma once

#include <stdexcept>

namespace kvlink {

/// A link whose rate is zero (or not finite) was asked to carry data.
class LinkUnusable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No bandwidth split can serve every agent.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The KV payload does not dominate the token payload, so the single-link
/// threshold is not well defined.
class KvNotDominant : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kvlink
