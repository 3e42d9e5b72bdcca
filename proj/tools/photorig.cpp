#include "photorig/app.hpp"

int main(int argc, char** argv) { return photorig::app::cli_main(argc, argv); }
