#include "brw/errors.hpp"

namespace brw {

ConfigError::ConfigError(std::string parameter, const std::string& what)
    : Error("invalid parameter '" + parameter + "': " + what), parameter_(std::move(parameter)) {}

PopulationCapError::PopulationCapError(int generation, std::uint64_t population, std::uint64_t cap)
    : Error("population cap exceeded at generation " + std::to_string(generation) + ": " +
            std::to_string(population) + " > " + std::to_string(cap)),
      generation_(generation),
      population_(population) {}

}  // namespace brw
