unsigned char crc8(const unsigned char d[4])
{
    unsigned char crc = 0xff;
    int i;
    int j;
    for (i = 0; i < 4; i++) {
        crc ^= d[i];
        for (j = 0; j < 8; j++) {
            if (crc & 0x80) {
                crc = (crc << 1) ^ 0x07;
            } else {
                crc = crc << 1;
            }
        }
    }
    return crc;
}
