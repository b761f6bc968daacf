#pragma once

#include <stdexcept>
#include <string>

namespace kinlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define KINLAB_ERROR(Name)                 \
  struct Name : Error {                    \
    explicit Name(const std::string& what) \
        : Error(#Name ": " + what) {}      \
  }

KINLAB_ERROR(BoxTooSmall);
KINLAB_ERROR(DimensionTooLarge);
KINLAB_ERROR(HypothesisViolated);
KINLAB_ERROR(ResolutionTooCoarse);
KINLAB_ERROR(ShellEmpty);
KINLAB_ERROR(ProjectionStalled);
KINLAB_ERROR(DegenerateFit);
KINLAB_ERROR(TooLarge);
KINLAB_ERROR(NotConnected);
KINLAB_ERROR(NoCrossing);
KINLAB_ERROR(ConfigError);

#undef KINLAB_ERROR

}  // namespace kinlab
