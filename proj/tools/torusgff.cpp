#include "torusgff/cli.hpp"

int main(int argc, char** argv) { return torusgff::cli_main(argc, const_cast<const char* const*>(argv)); }
