#include "fenrich/pipeline.hpp"

int main(int argc, char** argv) { return fenrich::pipeline::run_cli(argc, argv); }
