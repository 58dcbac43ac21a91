#!/usr/bin/env python3
"""Regenerate the committed golden assets.

    golden/upcb1b.eeprom.hex   hexdump of the stock XC2V1000 EEPROM image
    golden/frame_vid0_n0.ppm   first Vid0 frame at the default geometry
    scripts/upcb1b.urd         EEPROM provisioning script (XC2V1000)

All three are pure functions of the code, so a diff after running this
script means an intentional format change (update the assets and the
tests together) or a regression.
"""

from pathlib import Path

from vfpbench import eeprom, pattern, urd

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    golden = ROOT / "golden"
    scripts = ROOT / "scripts"
    golden.mkdir(exist_ok=True)
    scripts.mkdir(exist_ok=True)

    image = eeprom.encode(eeprom.BoardDescriptor(eeprom.BoardType.XC2V1000))
    (golden / "upcb1b.eeprom.hex").write_text(eeprom.hexdump(image), encoding="ascii")

    frame = pattern.render_frame(pattern.DEFAULT_WIDTH, pattern.DEFAULT_HEIGHT,
                                 pattern.VideoInput.VID0, 0)
    (golden / "frame_vid0_n0.ppm").write_bytes(pattern.encode_ppm(frame))

    script = urd.provisioning_script(eeprom.BoardType.XC2V1000)
    (scripts / "upcb1b.urd").write_text(script, encoding="utf-8")

    for path in ("golden/upcb1b.eeprom.hex", "golden/frame_vid0_n0.ppm",
                 "scripts/upcb1b.urd"):
        print(f"wrote {path} ({(ROOT / path).stat().st_size} bytes)")


if __name__ == "__main__":
    main()
