#include "cli_app.hpp"

int main(int argc, char** argv) { return migcli::cli_main(argc, argv); }
