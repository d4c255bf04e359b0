#pragma once
#include <CLI11.hpp>
