#include "cli_app.hpp"

int main(int argc, char** argv) { return coxsn::cli::run(argc, argv); }
