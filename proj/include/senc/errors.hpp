#pragma once

#include <stdexcept>
#include <string>

namespace senc {

// Every failure the toolkit reports derives from Error. The CLI maps the
// category onto an exit code, so callers only need to throw the right type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error { public: using Error::Error; };
class InputError : public Error { public: using Error::Error; };
class FormatError : public Error { public: using Error::Error; };
class NumericError : public Error { public: using Error::Error; };
class TrainingError : public Error { public: using Error::Error; };
class CheckpointError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class EvaluationError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

}  // namespace senc
