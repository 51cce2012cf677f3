#pragma once

#include <stdexcept>
#include <string>

namespace gramsteer {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GRAMSTEER_ERROR(name)             \
  class name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

GRAMSTEER_ERROR(SchemaError);
GRAMSTEER_ERROR(LabelError);
GRAMSTEER_ERROR(CapacityError);
GRAMSTEER_ERROR(ContractError);
GRAMSTEER_ERROR(InputTooLongError);
GRAMSTEER_ERROR(DegenerateTargetError);
GRAMSTEER_ERROR(DegenerateDirectionError);
GRAMSTEER_ERROR(InsufficientDataError);
GRAMSTEER_ERROR(LayerMismatchError);
GRAMSTEER_ERROR(ConfigError);
GRAMSTEER_ERROR(IoError);
GRAMSTEER_ERROR(TaggerError);

#undef GRAMSTEER_ERROR

}  // namespace gramsteer
