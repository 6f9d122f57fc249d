#include "app.hpp"

int main(int argc, char** argv) { return fracsim::app::main(argc, argv); }
