#!/usr/bin/env python3
"""Generate a deterministic corpus of document files (PDF, OOXML, CFB).

    make_documents.py OUT_DIR COUNT [--seed N] [--min-kb K] [--max-kb K]

Writes COUNT files named doc-<i>.<ext> and prints one line per file:
"<family>\t<path>". Output bytes depend only on the arguments.
"""

import argparse
import io
import os
import random
import struct
import sys
import zipfile

WORDS = (
    "the of and to in is was for that on as with by at from this be are or an it "
    "report results test analysis data system value table figure section method "
    "sample error result model file range time level process control quality "
    "summary project review meeting budget schedule total annual percent increase "
    "network security document version draft final approved pending customer order "
    "invoice amount payment account balance quarter revenue cost growth market "
    "research study group water energy temperature pressure measurement standard"
).split()


def sentence(rng):
    n = rng.randint(6, 18)
    words = [rng.choice(WORDS) for _ in range(n)]
    words[0] = words[0].capitalize()
    if rng.random() < 0.3:
        words.insert(rng.randint(1, n - 1), str(rng.randint(1, 99999)))
    return " ".join(words) + rng.choice([".", ".", ".", "?", ":"])


def paragraph(rng, k=None):
    return " ".join(sentence(rng) for _ in range(k or rng.randint(2, 7)))


def picture(rng, size=None):
    """A photo-like raster: gradients, shapes and noise."""
    from PIL import Image, ImageDraw, ImageFilter

    w, h = size or (rng.randint(120, 480), rng.randint(90, 360))
    c1 = tuple(rng.randint(0, 255) for _ in range(3))
    c2 = tuple(rng.randint(0, 255) for _ in range(3))
    img = Image.new("RGB", (w, h))
    px = img.load()
    for y in range(h):
        t = y / max(1, h - 1)
        row = tuple(int(a + (b - a) * t) for a, b in zip(c1, c2))
        for x in range(w):
            px[x, y] = row
    d = ImageDraw.Draw(img)
    for _ in range(rng.randint(3, 15)):
        box = sorted(rng.randint(0, w) for _ in range(2)), sorted(rng.randint(0, h) for _ in range(2))
        color = tuple(rng.randint(0, 255) for _ in range(3))
        shape = [box[0][0], box[1][0], box[0][1], box[1][1]]
        (d.ellipse if rng.random() < 0.5 else d.rectangle)(shape, fill=color)
    if rng.random() < 0.6:
        noise = Image.effect_noise((w, h), rng.randint(10, 60)).convert("RGB")
        img = Image.blend(img, noise, 0.25)
    return img.filter(ImageFilter.SMOOTH)


def image_bytes(rng, fmt):
    buf = io.BytesIO()
    img = picture(rng)
    if fmt == "JPEG":
        img.save(buf, "JPEG", quality=rng.randint(60, 95))
    else:
        img.save(buf, "PNG")
    return buf.getvalue()


# ---------------------------------------------------------------- PDF

def make_pdf_reportlab(rng, target):
    from reportlab.lib.pagesizes import A4, letter
    from reportlab.lib.styles import getSampleStyleSheet
    from reportlab.lib.units import cm
    from reportlab.platypus import Image as RLImage
    from reportlab.platypus import PageBreak, Paragraph, SimpleDocTemplate, Spacer, Table
    from reportlab.pdfbase import pdfmetrics
    from reportlab.pdfbase.ttfonts import TTFont

    font = "Helvetica"
    ttf = "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf"
    if os.path.exists(ttf) and rng.random() < 0.5:
        pdfmetrics.registerFont(TTFont("DejaVu", ttf))
        font = "DejaVu"
    buf = io.BytesIO()
    doc = SimpleDocTemplate(
        buf,
        pagesize=rng.choice([A4, letter]),
        pageCompression=rng.random() < 0.7,
        invariant=1,
        title=sentence(rng),
        author=rng.choice(WORDS),
    )
    styles = getSampleStyleSheet()
    for s in styles.byName.values():
        if hasattr(s, "fontName"):
            s.fontName = font
    story = []
    est = 0
    while est < target:
        r = rng.random()
        if r < 0.55:
            story.append(Paragraph(paragraph(rng), styles["BodyText"]))
            est += 700
        elif r < 0.65:
            story.append(Paragraph(sentence(rng), styles[rng.choice(["Heading1", "Heading2"])]))
            est += 150
        elif r < 0.8:
            rows = [[rng.choice(WORDS) for _ in range(4)]]
            rows += [[f"{rng.uniform(0, 1e4):.2f}" for _ in range(4)] for _ in range(rng.randint(3, 12))]
            story.append(Table(rows))
            est += 900
        elif r < 0.95:
            fmt = rng.choice(["JPEG", "PNG"])
            data = image_bytes(rng, fmt)
            story.append(RLImage(io.BytesIO(data), width=rng.randint(4, 14) * cm, height=rng.randint(3, 9) * cm))
            est += len(data)
        else:
            story.append(PageBreak())
        story.append(Spacer(1, 6))
    doc.build(story)
    return buf.getvalue()


def make_pdf_plot(rng, target):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.backends.backend_pdf import PdfPages

    buf = io.BytesIO()
    with PdfPages(buf, metadata={"Creator": None, "Producer": None, "CreationDate": None}) as pdf:
        size = 0
        while size < target:
            fig, ax = plt.subplots(figsize=(6, 4))
            n = rng.randint(20, 400)
            xs = list(range(n))
            for _ in range(rng.randint(1, 4)):
                y, v = [], rng.uniform(-5, 5)
                for _ in xs:
                    v += rng.gauss(0, 1)
                    y.append(v)
                (ax.plot if rng.random() < 0.7 else ax.scatter)(xs, y)
            ax.set_title(sentence(rng)[:60])
            ax.set_xlabel(rng.choice(WORDS))
            pdf.savefig(fig)
            plt.close(fig)
            size = buf.tell() + 8000
    return buf.getvalue()


# ---------------------------------------------------------------- OOXML

def xml_escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def zip_write(z, name, data, compress=True):
    info = zipfile.ZipInfo(name, date_time=(2017, 1, 1, 0, 0, 0))
    info.compress_type = zipfile.ZIP_DEFLATED if compress else zipfile.ZIP_STORED
    z.writestr(info, data)


def make_docx(rng, target):
    buf = io.BytesIO()
    media = []
    body = []
    size = 0
    while size < target:
        if rng.random() < 0.12:
            data = image_bytes(rng, rng.choice(["JPEG", "PNG"]))
            media.append(data)
            body.append(f'<w:p><w:r><w:drawing><a:blip r:embed="rId{len(media) + 10}"/></w:drawing></w:r></w:p>')
            size += len(data)
        else:
            bold = "<w:rPr><w:b/></w:rPr>" if rng.random() < 0.15 else ""
            text = xml_escape(paragraph(rng))
            body.append(f'<w:p><w:pPr><w:pStyle w:val="Normal"/></w:pPr><w:r>{bold}<w:t xml:space="preserve">{text}</w:t></w:r></w:p>')
            size += 260
    doc = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        '<w:document xmlns:w="http://schemas.openxmlformats.org/wordprocessingml/2006/main" '
        'xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships" '
        'xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main"><w:body>'
        + "".join(body)
        + "</w:body></w:document>"
    )
    rels = "".join(
        f'<Relationship Id="rId{i + 11}" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/image" Target="media/image{i + 1}.bin"/>'
        for i in range(len(media))
    )
    with zipfile.ZipFile(buf, "w") as z:
        zip_write(z, "[Content_Types].xml", '<?xml version="1.0"?><Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types"><Default Extension="xml" ContentType="application/xml"/><Override PartName="/word/document.xml" ContentType="application/vnd.openxmlformats-officedocument.wordprocessingml.document.main+xml"/></Types>')
        zip_write(z, "_rels/.rels", '<?xml version="1.0"?><Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships"><Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="word/document.xml"/></Relationships>')
        zip_write(z, "word/document.xml", doc)
        zip_write(z, "word/_rels/document.xml.rels", f'<?xml version="1.0"?><Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">{rels}</Relationships>')
        zip_write(z, "docProps/core.xml", f"<cp:coreProperties><dc:title>{xml_escape(sentence(rng))}</dc:title></cp:coreProperties>")
        for i, m in enumerate(media):
            zip_write(z, f"word/media/image{i + 1}.bin", m, compress=False)
    return buf.getvalue()


def col_name(i):
    s = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        s = chr(65 + r) + s
    return s


def make_xlsx(rng, target):
    buf = io.BytesIO()
    strings = [xml_escape(" ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 4)))) for _ in range(rng.randint(20, 200))]
    sheets = []
    size = 0
    while size < target:
        rows = []
        ncols = rng.randint(3, 12)
        for r in range(rng.randint(50, 400)):
            cells = []
            for c in range(ncols):
                ref = f"{col_name(c)}{r + 1}"
                if rng.random() < 0.3:
                    cells.append(f'<c r="{ref}" t="s"><v>{rng.randrange(len(strings))}</v></c>')
                else:
                    cells.append(f'<c r="{ref}"><v>{rng.uniform(-1e5, 1e5):.{rng.randint(0, 6)}f}</v></c>')
            rows.append(f'<row r="{r + 1}">{"".join(cells)}</row>')
        xml = '<?xml version="1.0"?><worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main"><sheetData>' + "".join(rows) + "</sheetData></worksheet>"
        sheets.append(xml)
        size += len(xml) // 6
    with zipfile.ZipFile(buf, "w") as z:
        zip_write(z, "[Content_Types].xml", '<?xml version="1.0"?><Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types"/>')
        zip_write(z, "xl/workbook.xml", "<workbook><sheets>" + "".join(f'<sheet name="Sheet{i + 1}" sheetId="{i + 1}"/>' for i in range(len(sheets))) + "</sheets></workbook>")
        zip_write(z, "xl/sharedStrings.xml", "<sst>" + "".join(f"<si><t>{s}</t></si>" for s in strings) + "</sst>")
        for i, s in enumerate(sheets):
            zip_write(z, f"xl/worksheets/sheet{i + 1}.xml", s)
    return buf.getvalue()


def make_pptx(rng, target):
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        zip_write(z, "[Content_Types].xml", '<?xml version="1.0"?><Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types"/>')
        size, i = 0, 0
        while size < target:
            i += 1
            shapes = "".join(
                f'<p:sp><p:txBody><a:p><a:r><a:rPr lang="en-US" sz="{rng.choice([1800, 2400, 3200])}"/><a:t>{xml_escape(sentence(rng))}</a:t></a:r></a:p></p:txBody></p:sp>'
                for _ in range(rng.randint(2, 8))
            )
            zip_write(z, f"ppt/slides/slide{i}.xml", f'<?xml version="1.0"?><p:sld xmlns:p="http://schemas.openxmlformats.org/presentationml/2006/main"><p:cSld><p:spTree>{shapes}</p:spTree></p:cSld></p:sld>')
            data = image_bytes(rng, rng.choice(["JPEG", "PNG"]))
            ext = "jpeg" if data[:2] == b"\xff\xd8" else "png"
            zip_write(z, f"ppt/media/image{i}.{ext}", data, compress=False)
            size += len(data) + 600
    return buf.getvalue()


# ---------------------------------------------------------------- CFB

SECTOR = 512
MINI = 64
MINI_CUTOFF = 4096
FREE, ENDCHAIN, FATSECT = 0xFFFFFFFF, 0xFFFFFFFE, 0xFFFFFFFD
NOSTREAM = 0xFFFFFFFF


def cfb(streams):
    """Compound file (version 3) holding `streams`: list of (name, bytes)
    in the root storage."""
    big = [(n, d) for n, d in streams if len(d) >= MINI_CUTOFF]
    small = [(n, d) for n, d in streams if len(d) < MINI_CUTOFF]

    # mini stream
    mini_data = bytearray()
    minifat = []
    mini_start = {}
    for name, data in small:
        nsec = max(1, -(-len(data) // MINI))
        start = len(minifat)
        mini_start[name] = start
        minifat += [start + i + 1 for i in range(nsec - 1)] + [ENDCHAIN]
        mini_data += data + b"\0" * (nsec * MINI - len(data))

    sectors = []  # list of bytes, each 512
    fat = []

    def alloc(data):
        if not data:
            return ENDCHAIN
        nsec = -(-len(data) // SECTOR)
        start = len(sectors)
        for i in range(nsec):
            chunk = data[i * SECTOR:(i + 1) * SECTOR]
            sectors.append(chunk + b"\0" * (SECTOR - len(chunk)))
            fat.append(start + i + 1 if i < nsec - 1 else ENDCHAIN)
        return start

    starts = {name: alloc(data) for name, data in big}
    ministream_start = alloc(bytes(mini_data)) if mini_data else ENDCHAIN
    minifat_bytes = b"".join(struct.pack("<I", v) for v in minifat)
    minifat_start = alloc(minifat_bytes) if minifat else ENDCHAIN

    # directory: root + streams, as a degenerate right-leaning tree
    entries = [("Root Entry", 5, ministream_start, len(mini_data))]
    for name, data in streams:
        st = mini_start[name] if len(data) < MINI_CUTOFF else starts[name]
        entries.append((name, 2, st, len(data)))
    dir_bytes = bytearray()
    for i, (name, kind, start, size) in enumerate(entries):
        enc = name.encode("utf-16-le") + b"\0\0"
        e = bytearray(128)
        e[:len(enc)] = enc
        struct.pack_into("<HBB", e, 64, len(enc), kind, 1)
        left = right = child = NOSTREAM
        if i == 0 and len(entries) > 1:
            child = 1
        elif 0 < i < len(entries) - 1:
            right = i + 1
        struct.pack_into("<III", e, 68, left, right, child)
        struct.pack_into("<II", e, 116, start, size)
        dir_bytes += e
    dir_start = alloc(bytes(dir_bytes))

    # FAT sectors (assumes < 109 FAT sectors, i.e. files under ~6.8 MB)
    n_data = len(sectors)
    n_fat = 1
    while n_fat * 128 < n_data + n_fat:
        n_fat += 1
    fat_start = len(sectors)
    fat += [FATSECT] * n_fat
    fat += [FREE] * (n_fat * 128 - len(fat))
    fat_bytes = b"".join(struct.pack("<I", v) for v in fat)
    for i in range(n_fat):
        sectors.append(fat_bytes[i * SECTOR:(i + 1) * SECTOR])

    header = bytearray(SECTOR)
    header[:8] = b"\xd0\xcf\x11\xe0\xa1\xb1\x1a\xe1"
    struct.pack_into("<HHHHH", header, 24, 0x3E, 3, 0xFFFE, 9, 6)
    struct.pack_into("<I", header, 44, n_fat)
    struct.pack_into("<I", header, 48, dir_start)
    struct.pack_into("<I", header, 56, MINI_CUTOFF)
    struct.pack_into("<II", header, 60, minifat_start, -(-len(minifat_bytes) // SECTOR) if minifat else 0)
    struct.pack_into("<II", header, 68, ENDCHAIN, 0)
    for i in range(109):
        struct.pack_into("<I", header, 76 + 4 * i, fat_start + i if i < n_fat else FREE)
    return bytes(header) + b"".join(sectors)


def summary_info(rng):
    title = sentence(rng)[:40].encode("cp1252")
    props = struct.pack("<IIII", 2, 0x1E, len(title) + 1, 0) + title + b"\0"
    body = struct.pack("<II", 8 + 8 + len(props), 1) + struct.pack("<II", 2, 16) + props
    return struct.pack("<HHI", 0xFFFE, 0, 0x00020006) + bytes(16) + struct.pack("<I", 1) + bytes(16) + struct.pack("<I", 48) + body


def make_doc(rng, target):
    unicode = rng.random() < 0.5
    text = ""
    while len(text) * (2 if unicode else 1) < target * 0.6:
        text += paragraph(rng) + "\r"
    raw = text.encode("utf-16-le" if unicode else "cp1252", "replace")
    fib = bytearray(1472)
    struct.pack_into("<HHHHH", fib, 0, 0xA5EC, 0xC1, 0x6E, 0x409, 0)
    struct.pack_into("<HH", fib, 10, 0x1200, 0xBF)
    for off in range(32, 1472, 4):
        if rng.random() < 0.3:
            struct.pack_into("<I", fib, off, rng.randint(0, len(raw) + 4096))
    fkps = bytearray()
    for _ in range(max(1, len(raw) // 4096)):
        page = bytearray(512)
        n = rng.randint(5, 20)
        for i in range(n + 1):
            struct.pack_into("<I", page, 4 * i, 1024 + i * rng.randint(50, 400))
        for j in range(n):
            page[400 + j * 5] = rng.randint(0, 255)
        page[511] = n
        fkps += page
    word = bytes(fib) + raw + bytes((-len(raw)) % 512) + bytes(fkps)
    table = bytearray()
    for name in ["Normal", "Heading 1", "Heading 2", "Default Paragraph Font", "Table Normal", "Title"]:
        enc = name.encode("utf-16-le")
        table += struct.pack("<HHH", 0x0A + len(enc), rng.randint(0, 15), len(name)) + enc + b"\0\0"
        table += bytes(rng.randint(0, 1) for _ in range(rng.randint(8, 40)))
    for i in range(rng.randint(20, 200)):
        table += struct.pack("<IH", i * rng.randint(1, 300), rng.randint(0, 0x3FF))
    streams = [("WordDocument", word), ("1Table", bytes(table)), ("\x05SummaryInformation", summary_info(rng))]
    if rng.random() < 0.5:
        data = b"".join(image_bytes(rng, rng.choice(["JPEG", "PNG"])) for _ in range(rng.randint(1, 3)))
        streams.append(("Data", data))
    return cfb(streams)


def biff(rtype, data):
    return struct.pack("<HH", rtype, len(data)) + data


def make_xls(rng, target):
    out = bytearray(biff(0x0809, struct.pack("<HHHHII", 0x600, 0x5, 0x1FAA, 0x7CD, 0x41, 6)))
    for i in range(rng.randint(4, 10)):
        name = rng.choice(["Arial", "Calibri", "Times New Roman", "Courier New"]).encode("utf-16-le")
        out += biff(0x0031, struct.pack("<HHHHHBBBB", 200 + 20 * i, 0, 0x7FFF, 400, 0, 0, 0, 0, 0) + bytes([len(name) // 2, 1]) + name)
    strings = [" ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 5))) for _ in range(rng.randint(30, 300))]
    sst = struct.pack("<II", len(strings), len(strings))
    for s in strings:
        enc = s.encode("latin-1")
        sst += struct.pack("<HB", len(enc), 0) + enc
    out += biff(0x00FC, sst[:8000])
    row = 0
    while len(out) < target:
        for col in range(rng.randint(3, 12)):
            r = rng.random()
            if r < 0.5:
                out += biff(0x0203, struct.pack("<HHHd", row, col, 15, rng.uniform(-1e6, 1e6)))
            elif r < 0.8:
                out += biff(0x027E, struct.pack("<HHHI", row, col, 15, (rng.randint(0, 1 << 29) << 2) | 2))
            else:
                out += biff(0x00FD, struct.pack("<HHHI", row, col, 15, rng.randrange(len(strings))))
        row += 1
    out += biff(0x000A, b"")
    streams = [("Workbook", bytes(out)), ("\x05SummaryInformation", summary_info(rng))]
    return cfb(streams)


FAMILIES = [
    ("PDF", "pdf", make_pdf_reportlab),
    ("PDF", "pdf", make_pdf_plot),
    ("OOXML", "docx", make_docx),
    ("OOXML", "xlsx", make_xlsx),
    ("OOXML", "pptx", make_pptx),
    ("CFB", "doc", make_doc),
    ("CFB", "xls", make_xls),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("count", type=int)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--min-kb", type=int, default=16)
    ap.add_argument("--max-kb", type=int, default=256)
    a = ap.parse_args()
    os.makedirs(a.out, exist_ok=True)
    for i in range(a.count):
        rng = random.Random(a.seed * 1_000_003 + i)
        family, ext, make = FAMILIES[i % len(FAMILIES)]
        target = rng.randint(a.min_kb, a.max_kb) * 1024
        data = make(rng, target)
        path = os.path.join(a.out, f"doc-{a.seed}-{i:04d}.{ext}")
        with open(path, "wb") as f:
            f.write(data)
        print(f"{family}\t{path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
