#ifndef STUDYROUTE_ERRORS_HPP
#define STUDYROUTE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace studyroute {

/// Base class for all engine errors.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be loaded or failed validation. Messages carry the
/// offending path and, for tabular inputs, the row number.
class load_error : public error {
public:
    using error::error;
};

/// An argument is outside its documented domain (T <= 0, empty record
/// list, degenerate plane dims, ...).
class parameter_error : public error {
public:
    using error::error;
};

/// A class id is unknown to the mapping database.
class registry_error : public error {
public:
    using error::error;
};

/// A series was handed to a backend of the wrong modality.
class routing_error : public error {
public:
    using error::error;
};

}  // namespace studyroute

#endif  // STUDYROUTE_ERRORS_HPP
