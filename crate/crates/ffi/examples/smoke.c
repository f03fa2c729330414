#include <math.h>
#include <stdio.h>

#include "qfi_lab.h"

int main(void) {
    QfiHamiltonian *h = NULL;
    QfiControlSequence *seq = NULL;
    QfiMat2 g;
    double qfi = 0.0;
    char msg[256];

    if (qfi_hamiltonian_new(QFI_HAMILTONIAN_KIND_H1, 1.0, 1e-3, 0.0, &h) != QFI_STATUS_OK ||
        qfi_control_method2(1.0, 0, 40.0 * M_PI_2, &seq) != QFI_STATUS_OK) {
        qfi_last_error_message(msg, sizeof msg);
        fprintf(stderr, "setup failed: %s\n", msg);
        return 1;
    }
    if (qfi_generator(h, seq, 40.0 * M_PI_2, 0.01, &g) != QFI_STATUS_OK || qfi_max_qfi(&g, &qfi) != QFI_STATUS_OK) {
        qfi_last_error_message(msg, sizeof msg);
        fprintf(stderr, "evolution failed: %s\n", msg);
        return 1;
    }
    printf("qfi-lab %s: max QFI after 40 pulses = %.6e\n", qfi_version(), qfi);
    qfi_control_free(seq);
    qfi_hamiltonian_free(h);
    return 0;
}
