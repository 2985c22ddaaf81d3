#include "lab.hpp"

int main(int argc, char** argv) { return enlarge::lab::lab_main(argc, argv); }
