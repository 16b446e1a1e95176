#pragma once

#include <stdexcept>
#include <string>

namespace moatplus {

// Base for all engine errors. Each subclass corresponds to one failure
// domain so callers can map them to exit codes / HTTP statuses.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error { public: using Error::Error; };
class ValidationError : public Error { public: using Error::Error; };
class SchemaError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class FitError : public Error { public: using Error::Error; };
class FeatureError : public Error { public: using Error::Error; };
class MaskingError : public Error { public: using Error::Error; };
class PipelineError : public Error { public: using Error::Error; };
class TrainError : public Error { public: using Error::Error; };
class ModelBundleError : public Error { public: using Error::Error; };
class MetricError : public Error { public: using Error::Error; };
class TargetError : public Error { public: using Error::Error; };
class AggregationError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

}  // namespace moatplus
