#include "taumlmc/cli.hpp"

int main(int argc, char** argv) { return taumlmc::dispatch(argc, argv); }
