/* Compiles the public header as C and exercises one handle lifecycle. */
#include <stdio.h>

#include "doamp.h"

int main(void) {
  doamp_rm* op = NULL;
  double s[8] = {1, 2, 3, 4, 5, 6, 7, 8};
  double x[4];
  double back[8];
  size_t i;
  if (doamp_rm_new(8, 4, 1, &op) != DOAMP_OK) return 1;
  if (doamp_rm_forward(op, s, 8, x, 4) != DOAMP_OK) return 1;
  if (doamp_rm_inverse(op, x, 4, back, 8) != DOAMP_OK) return 1;
  doamp_rm_free(op);
  for (i = 0; i < 8; ++i) {
    if (back[i] != back[i]) return 1;
  }
  if (doamp_rm_new(8, 0, 1, &op) == DOAMP_OK) return 1;
  printf("%s\n", doamp_last_error());
  return 0;
}
