#include "deepsdrf/harness.hpp"
