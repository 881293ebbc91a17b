#include <cstdio>

#include "heatlab/version.hpp"

int main() {
    std::printf("heatlab %s (cli under construction)\n", heatlab::version_string);
    return 2;
}
