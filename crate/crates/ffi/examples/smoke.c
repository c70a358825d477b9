/* Build: cargo build -p wisense-ffi --release
 *        cc crates/ffi/examples/smoke.c -Icrates/ffi/include \
 *           target/release/libwisense_ffi.a -lm -lpthread -ldl -o smoke */
#include <stdio.h>
#include "wisense.h"

int main(void) {
    WsMovingAverage *ma = NULL;
    if (ws_ma_new(3, &ma) != WS_STATUS_OK) return 1;
    double y = 0.0;
    for (int i = 1; i <= 5; i++) {
        ws_ma_update(ma, (double)i, &y);
        printf("%d -> %g\n", i, y);
    }
    ws_ma_free(ma);

    int32_t rssi = 0;
    ws_quantize_rssi(0.001, &rssi);
    printf("0.001 mW -> %d dBm\n", rssi);

    if (ws_quantize_rssi(-1.0, &rssi) != WS_STATUS_OK) {
        char msg[256];
        ws_last_error_message(msg, sizeof msg);
        printf("error: %s\n", msg);
    }
    printf("wisense %s\n", ws_version());
    return 0;
}
