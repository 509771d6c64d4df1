#include "epinet/cli.hpp"

int main(int argc, char** argv) { return epinet::run_cli(argc, argv); }
