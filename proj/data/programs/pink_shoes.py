images = open_images("ImageSet1.jpg")
count = 0
for image in images:
    two_pink_shoes = query(image, "Are there exactly 2 pink shoes?")
    if two_pink_shoes == "yes":
        count += 1
answer = count
