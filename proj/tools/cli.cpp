#include "vstr.h"
int main(){ return vstr_last_error()[0] == 0 ? 0 : 1; }
